#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "harris/error.hpp"
#include "harris/replicas.hpp"
#include "harris/rng.hpp"

namespace harris {

struct ProportionInterval {
  double low;
  double high;
};

/// 95% Wilson score interval for `successes` out of `n` trials.
inline ProportionInterval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054) {
  if (n == 0) throw InvalidInput("Wilson interval needs at least one trial");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::clamp(std::min(centre - half, p), 0.0, 1.0), std::clamp(std::max(centre + half, p), 0.0, 1.0)};
}

/// Fraction of replicas that stay inside a null set through a finite horizon.
struct EscapeEstimate {
  double estimate = 0.0;
  std::uint64_t replicas = 0;
  std::uint64_t horizon = 0;
  std::uint64_t stayed = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> truncation_bias_bound;
  /// First step at which replica r left the set; empty if it stayed.
  std::vector<std::optional<std::uint64_t>> exit_steps;
};

/// A chain usable by the generic diagnostics: `step(state, n, rng)` returns
/// X_n given X_{n-1} = state.
template <class Chain, class State>
concept SteppableChain = requires(const Chain& c, const State& s, RngStream& rng) {
  { c.step(s, std::uint64_t{1}, rng) } -> std::convertible_to<State>;
};

template <class Chain, class State>
concept HasEscapeTailBound = requires(const Chain& c, const State& s) {
  { c.escape_tail_bound(s, std::uint64_t{1}) } -> std::convertible_to<double>;
};

struct EscapeOptions {
  unsigned workers = 1;
};

/// Runs `replicas` independent copies from `start` for `horizon` steps, each
/// on stream derive_stream(seed, r), and records when each leaves `null_set`.
template <class Chain, class State, class InSet>
  requires SteppableChain<Chain, State>
EscapeEstimate estimate_escape(const Chain& chain, InSet&& null_set, const State& start, std::uint64_t horizon,
                               std::uint64_t replicas, std::uint64_t seed, EscapeOptions opts = {}) {
  if (!null_set(start)) throw InvalidInput("escape start must lie in the null set");
  if (horizon < 1) throw InvalidInput("horizon must be at least 1");
  if (replicas < 100) throw InvalidInput("escape estimation needs at least 100 replicas");

  EscapeEstimate out;
  out.replicas = replicas;
  out.horizon = horizon;
  out.exit_steps.assign(replicas, std::nullopt);
  for_each_replica(replicas, opts.workers, [&](std::uint64_t r) {
    RngStream rng = derive_stream(seed, r);
    State s = start;
    for (std::uint64_t n = 1; n <= horizon; ++n) {
      s = chain.step(s, n, rng);
      if (!null_set(s)) {
        out.exit_steps[r] = n;
        return;
      }
    }
  });
  out.stayed = static_cast<std::uint64_t>(
      std::count_if(out.exit_steps.begin(), out.exit_steps.end(), [](const auto& e) { return !e.has_value(); }));
  out.estimate = static_cast<double>(out.stayed) / static_cast<double>(replicas);
  const auto ci = wilson_interval(out.stayed, replicas);
  out.ci_low = ci.low;
  out.ci_high = ci.high;
  if constexpr (HasEscapeTailBound<Chain, State>) out.truncation_bias_bound = chain.escape_tail_bound(start, horizon);
  return out;
}

}  // namespace harris
