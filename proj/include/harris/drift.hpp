#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <vector>

#include "harris/error.hpp"
#include "harris/escape.hpp"
#include "harris/rng.hpp"

namespace harris {

template <class State>
struct DriftEntry {
  State state;
  double expectation;     // E[V(X_1) | X_0 = state]
  double standard_error;  // 0 for exact evaluation
  double bound;           // V(state) - 1 + b 1_C(state)
  bool satisfied;
};

template <class Chain, class State>
concept ExactSuccessors = requires(const Chain& c, const State& s) {
  { c.successors(s) };
};

namespace detail {

inline void check_probe(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("drift function must be positive and finite on probes");
}

}  // namespace detail

/// Drift condition E[V(X_1)|x] <= V(x) - 1 + b 1_C(x), evaluated exactly
/// from the chain's successor lists.
template <class Chain, class State>
  requires ExactSuccessors<Chain, State>
std::vector<DriftEntry<State>> check_drift_exact(const Chain& chain, const std::function<double(const State&)>& V,
                                                 const std::function<bool(const State&)>& in_C, double b,
                                                 const std::vector<State>& probes) {
  std::vector<DriftEntry<State>> out;
  for (const auto& x : probes) {
    const double vx = V(x);
    detail::check_probe(vx);
    double e = 0.0;
    for (const auto& [y, p] : chain.successors(x)) e += p * V(State(y));
    const double bound = vx - 1.0 + (in_C(x) ? b : 0.0);
    out.push_back({x, e, 0.0, bound, e <= bound});
  }
  return out;
}

/// Monte Carlo version: `budget` one-step draws per probe, probe k on
/// derive_stream(seed, k).
template <class Chain, class State>
  requires SteppableChain<Chain, State>
std::vector<DriftEntry<State>> check_drift_mc(const Chain& chain, const std::function<double(const State&)>& V,
                                              const std::function<bool(const State&)>& in_C, double b,
                                              const std::vector<State>& probes, std::uint64_t budget,
                                              std::uint64_t seed) {
  if (budget < 2) throw InvalidInput("drift Monte Carlo budget must be at least 2");
  std::vector<DriftEntry<State>> out;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const State& x = probes[k];
    const double vx = V(x);
    detail::check_probe(vx);
    RngStream rng = derive_stream(seed, k);
    double sum = 0.0, sum_sq = 0.0;
    for (std::uint64_t t = 0; t < budget; ++t) {
      const double v = V(chain.step(x, 1, rng));
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(budget);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    const double bound = vx - 1.0 + (in_C(x) ? b : 0.0);
    out.push_back({x, mean, std::sqrt(var / n), bound, mean <= bound});
  }
  return out;
}

}  // namespace harris
