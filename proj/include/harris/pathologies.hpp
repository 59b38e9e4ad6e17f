#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "harris/core.hpp"
#include "harris/discrete_kernel.hpp"
#include "harris/mwg.hpp"
#include "harris/rng.hpp"

namespace harris {

/// Exact rational probability num/den.
struct Rational {
  std::uint64_t num;
  std::uint64_t den;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Countable chain on {1, 2, ...}: state 1 is absorbing, and from x >= 2 the
/// chain jumps to 1 with probability 1/x^2, else to x + 1. Its stationary law
/// is the point mass at 1, yet from x >= 2 it escapes to infinity with
/// probability (x - 1)/x.
struct Example3Chain {
  using State = std::uint64_t;

  /// Successors with exact probabilities. Valid while x^2 fits in 64 bits.
  std::vector<std::pair<State, Rational>> transitions(State x) const {
    if (x == 0) throw InvalidInput("states are positive integers");
    if (x == 1) return {{1, {1, 1}}};
    const std::uint64_t den = x * x;
    return {{1, {1, den}}, {x + 1, {den - 1, den}}};
  }

  std::vector<std::pair<State, double>> successors(State x) const {
    std::vector<std::pair<State, double>> out;
    for (const auto& [s, r] : transitions(x)) out.emplace_back(s, r.value());
    return out;
  }

  State step(State x, std::uint64_t /*n*/, RngStream& rng) const {
    if (x == 1) return 1;
    const double xd = static_cast<double>(x);
    return rng.uniform() * xd * xd < 1.0 ? 1 : x + 1;
  }

  /// Upper bound on P(stay through horizon) - P(stay forever) from `start`:
  /// the absorption mass after the horizon is at most sum_{j > start+horizon} 1/j^2.
  double escape_tail_bound(State start, std::uint64_t horizon) const {
    return 1.0 / static_cast<double>(start + horizon);
  }
};

inline Example3Chain example3() { return {}; }

/// Example 3 on states 1..n (kernel index i holds state i+1). The last state
/// is made absorbing; its tail bias bound is sum_{j >= n} 1/j^2 <= 1/(n-1).
inline DiscreteKernel example3_truncated(std::size_t n) {
  if (n < 3) throw InvalidInput("truncation must keep at least 3 states");
  std::vector<Transition> t;
  t.reserve(2 * n);
  t.push_back({0, 0, 1.0});
  for (std::size_t x = 2; x < n; ++x) {
    const double xd = static_cast<double>(x);
    const double back = 1.0 / (xd * xd);
    t.push_back({x - 1, 0, back});
    t.push_back({x - 1, x, 1.0 - back});
  }
  t.push_back({n - 1, n - 1, 1.0});
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t x = 1; x <= n; ++x) labels.push_back(std::to_string(x));
  return DiscreteKernel(n, std::move(t), std::move(labels), 1.0 / static_cast<double>(n - 1));
}

/// Probability that Example 3 started at x never hits 1:
/// prod_{j >= x} (1 - 1/j^2) = (x - 1)/x.
inline double escape_closed_form(std::uint64_t x) {
  if (x < 2) throw InvalidInput("escape probability is defined for x >= 2");
  return static_cast<double>(x - 1) / static_cast<double>(x);
}

/// State of the continuous-space version on [0,1]. Reciprocals 1/m are
/// tagged so that membership never depends on floating-point equality.
struct Example4State {
  enum class Tag { reciprocal, generic };
  Tag tag = Tag::generic;
  std::uint64_t m = 0;  // valid when tag == reciprocal
  double x = 0.0;

  static Example4State reciprocal(std::uint64_t m) {
    if (m == 0) throw InvalidInput("reciprocal index must be positive");
    return {Tag::reciprocal, m, 1.0 / static_cast<double>(m)};
  }
  static Example4State generic(double x) { return {Tag::generic, 0, x}; }

  bool is_reciprocal() const { return tag == Tag::reciprocal; }
  double value() const { return x; }

  friend bool operator==(const Example4State&, const Example4State&) = default;
};

/// Kernel on [0,1]: from 1/m, regenerate from Uniform(0,1) with probability
/// 1/m^2, else move to 1/(m+1); from any other point, regenerate.
struct Example4Chain {
  using State = Example4State;

  State step(const State& s, std::uint64_t /*n*/, RngStream& rng) const {
    if (s.is_reciprocal()) {
      const double md = static_cast<double>(s.m);
      if (rng.uniform() * md * md < 1.0) return State::generic(rng.uniform());
      return State::reciprocal(s.m + 1);
    }
    return State::generic(rng.uniform());
  }

  double escape_tail_bound(const State& start, std::uint64_t horizon) const {
    return 1.0 / static_cast<double>(start.m + horizon);
  }
};

inline Example4Chain example4() { return {}; }

/// A coordinate-sampler pathology: target plus one proposal per coordinate.
struct CoordinateModel {
  TargetDensity target;
  std::vector<CoordinateProposal> proposals;

  CoordinateSampler sampler(ScanSchedule schedule = ScanSchedule::random()) const {
    return CoordinateSampler(proposals, schedule);
  }
};

/// f(x1, x2) = (e/2) exp(x1 - |x2| e^{2 x1}) on {x1 > 1}, unit normal
/// coordinate proposals. The density integrates to 1 but its integral along
/// the line x2 = 0 diverges.
inline CoordinateModel example9() {
  const double log_const = 1.0 - std::numbers::ln2;
  TargetDensity target(
      2, [](std::span<const double> x) { return x[0] > 1.0; },
      [log_const](std::span<const double> x) {
        // x2 == 0 is kept separate: |x2| * e^{2 x1} would be 0 * inf for huge x1.
        const double spread = x[1] == 0.0 ? 0.0 : std::abs(x[1]) * std::exp(2.0 * x[0]);
        return log_const + x[0] - spread;
      },
      SupportBounds{{1.0, kNegInf}, {kInf, kInf}});
  return {std::move(target), {normal_coordinate_proposal(0), normal_coordinate_proposal(1)}};
}

/// Uniform density on the annulus 16 < x1^2 + x2^2 < 25 with coordinate
/// proposals Uniform[x_i - 1, x_i + 1].
inline CoordinateModel example14() {
  TargetDensity target(
      2,
      [](std::span<const double> x) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        return r2 > 16.0 && r2 < 25.0;
      },
      [](std::span<const double>) { return 0.0; }, SupportBounds{{-5.0, -5.0}, {5.0, 5.0}});
  return {std::move(target), {uniform_coordinate_proposal(0), uniform_coordinate_proposal(1)}};
}

}  // namespace harris
