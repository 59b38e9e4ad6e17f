#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "harris/escape.hpp"
#include "harris/trace.hpp"

namespace harris {

using FirstAccepts = std::vector<std::optional<std::uint64_t>>;

/// First step at which a move in each coordinate direction 0..d-1 was
/// accepted; empty entries were never accepted.
template <class State>
FirstAccepts first_accept_steps(const Trace<State>& trace, std::size_t d) {
  FirstAccepts out(d);
  for (const auto& e : trace.events()) {
    if (!e.accepted || e.direction.kind != Direction::Kind::coordinate) continue;
    if (e.direction.index < d && !out[e.direction.index]) out[e.direction.index] = e.step;
  }
  return out;
}

/// Step by which every coordinate has moved, if it happened.
inline std::optional<std::uint64_t> full_coverage_step(const FirstAccepts& first) {
  std::uint64_t last = 0;
  for (const auto& f : first) {
    if (!f) return std::nullopt;
    last = std::max(last, *f);
  }
  return last;
}

struct CoveragePoint {
  std::uint64_t n;
  double p_not_covered;  // empirical P[D_n]
  double ci_low;
  double ci_high;
};

/// Across replicas, the empirical probability of D_n (by time n some
/// coordinate has not yet moved) at each checkpoint.
inline std::vector<CoveragePoint> coverage_curve(const std::vector<FirstAccepts>& replicas,
                                                 const std::vector<std::uint64_t>& checkpoints) {
  if (replicas.empty()) throw InvalidInput("coverage curve needs at least one replica");
  std::vector<std::optional<std::uint64_t>> covered;
  covered.reserve(replicas.size());
  for (const auto& r : replicas) covered.push_back(full_coverage_step(r));
  std::vector<CoveragePoint> out;
  for (auto n : checkpoints) {
    const auto hits = static_cast<std::uint64_t>(
        std::count_if(covered.begin(), covered.end(), [n](const auto& c) { return !c || *c > n; }));
    const auto ci = wilson_interval(hits, replicas.size());
    out.push_back({n, static_cast<double>(hits) / static_cast<double>(replicas.size()), ci.low, ci.high});
  }
  return out;
}

struct CoverageReport {
  FirstAccepts first_accept;
  std::optional<std::uint64_t> covered_at;
};

template <class State>
CoverageReport coverage_report(const Trace<State>& trace, std::size_t d) {
  auto first = first_accept_steps(trace, d);
  auto covered = full_coverage_step(first);
  return {std::move(first), covered};
}

}  // namespace harris
