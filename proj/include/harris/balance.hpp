#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <string>
#include <vector>

#include "harris/metropolis.hpp"
#include "harris/mwg.hpp"
#include "harris/pathologies.hpp"
#include "harris/rng.hpp"

namespace harris {

/// One checked pair for the detailed-balance identity.
struct BalancePair {
  Direction direction;
  Point x;
  Point y;
  BalanceSides sides;
  double log_alpha_xy;
  double log_alpha_yx;
};

/// Identities are only asserted where every log term is at most this large
/// in magnitude; beyond it, rounding of the sum alone exceeds 1e-12.
inline constexpr double kBalanceLogRange = 700.0;

inline bool within_balance_range(std::initializer_list<double> terms) {
  return std::all_of(terms.begin(), terms.end(), [](double t) { return std::isfinite(t) && std::abs(t) <= kBalanceLogRange; });
}

inline TargetDensity normal2_target() {
  return TargetDensity(2, [](std::span<const double>) { return true; },
                       [](std::span<const double> x) { return standard_normal_log_pdf(x[0]) + standard_normal_log_pdf(x[1]); });
}

/// `count` in-support pairs for a coordinate-sampler model. `draw_x` returns
/// a candidate current state; y comes from the model's own proposal in a
/// uniformly chosen direction. Candidates off the support or outside the
/// asserted range are redrawn.
template <class DrawX>
std::vector<BalancePair> coordinate_balance_pairs(const CoordinateModel& model, DrawX&& draw_x, std::size_t count,
                                                  RngStream& rng) {
  std::vector<BalancePair> out;
  out.reserve(count);
  const std::size_t d = model.target.dim();
  while (out.size() < count) {
    const Point x = draw_x(rng);
    const std::size_t i = rng.uniform_index(d);
    const auto& cp = model.proposals[i];
    const double z = cp.sample_z(x, rng);
    const Point y = x.with_coord(i, z);
    const double lfx = model.target.log_density(x), lfy = model.target.log_density(y);
    const double lqxy = cp.log_q(x, z), lqyx = cp.log_q(y, x[i]);
    if (!within_balance_range({lfx, lfy, lqxy, lqyx})) continue;
    out.push_back({Direction::coordinate(i), x, y, coordinate_balance(model.target, cp, x, z),
                   coord_acceptance_log(model.target, cp, x, z), coord_acceptance_log(model.target, cp, y, x[i])});
  }
  return out;
}

/// Pairs for full-dimensional random-walk Metropolis-Hastings.
inline std::vector<BalancePair> mh_balance_pairs(const TargetDensity& target, const ProposalKernel& prop,
                                                 double spread, std::size_t count, RngStream& rng) {
  std::vector<BalancePair> out;
  out.reserve(count);
  while (out.size() < count) {
    std::vector<double> c(target.dim());
    for (double& v : c) v = rng.normal(0.0, spread);
    const Point x(std::move(c));
    const Point y = prop.sample(x, rng);
    const double lfx = target.log_density(x), lfy = target.log_density(y);
    const double lqxy = prop.log_q(x, y), lqyx = prop.log_q(y, x);
    if (!within_balance_range({lfx, lfy, lqxy, lqyx})) continue;
    out.push_back({Direction::full(), x, y, detailed_balance(target, prop, x, y), acceptance_log(target, prop, x, y),
                   acceptance_log(target, prop, y, x)});
  }
  return out;
}

/// Candidate states spread over the interesting part of each model.
inline Point example9_balance_draw(RngStream& rng) {
  const double x1 = rng.uniform(1.0, 9.0);
  const double x2 = rng.normal() * std::exp(-2.0 * x1) * rng.uniform(0.0, 50.0);
  return Point{x1, x2};
}

inline Point example14_balance_draw(RngStream& rng) {
  const double r = std::sqrt(rng.uniform(16.0, 25.0));
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return Point{r * std::cos(theta), r * std::sin(theta)};
}

/// Pairs for one of the named fixtures: `ex9`, `ex14` (coordinate kernels)
/// or `normal2` (random-walk MH on a 2-d standard normal).
inline std::vector<BalancePair> balance_pairs(const std::string& fixture, std::size_t count, RngStream& rng) {
  if (fixture == "ex9") return coordinate_balance_pairs(example9(), example9_balance_draw, count, rng);
  if (fixture == "ex14") return coordinate_balance_pairs(example14(), example14_balance_draw, count, rng);
  if (fixture == "normal2") return mh_balance_pairs(normal2_target(), gaussian_random_walk(1.0), 2.0, count, rng);
  throw InvalidInput("unknown balance fixture '" + fixture + "'");
}

}  // namespace harris
