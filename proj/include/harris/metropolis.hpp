#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>

#include "harris/core.hpp"
#include "harris/rng.hpp"
#include "harris/trace.hpp"

namespace harris {

/// Proposal kernel Q(x, dy) = q(x, y) dy on R^d.
struct ProposalKernel {
  std::function<Point(const Point&, RngStream&)> sample;
  std::function<double(const Point&, const Point&)> log_q;
};

/// Symmetric Gaussian random walk y = x + scale * Z.
inline ProposalKernel gaussian_random_walk(double scale) {
  if (!(scale > 0.0)) throw InvalidInput("random-walk scale must be positive");
  return {
      [scale](const Point& x, RngStream& rng) {
        std::vector<double> y(x.vec());
        for (double& c : y) c += scale * rng.normal();
        return Point(std::move(y));
      },
      [scale](const Point& x, const Point& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.dim(); ++i)
          s += standard_normal_log_pdf((y[i] - x[i]) / scale) - std::log(scale);
        return s;
      }};
}

/// Proposal that ignores the current state: y ~ g.
inline ProposalKernel independence_proposal(std::function<Point(RngStream&)> draw,
                                            std::function<double(const Point&)> log_g) {
  return {[draw](const Point&, RngStream& rng) { return draw(rng); },
          [log_g](const Point&, const Point& y) { return log_g(y); }};
}

/// log alpha(x, y) = min(0, log f(y) + log q(y,x) - log f(x) - log q(x,y)),
/// with alpha = 1 whenever f(x) q(x,y) = 0.
inline double acceptance_log(const TargetDensity& target, const ProposalKernel& prop, const Point& x,
                             const Point& y) {
  const double forward = target.log_density(x) + prop.log_q(x, y);
  if (forward == kNegInf) return 0.0;
  const double lfy = target.log_density(y);
  if (lfy == kNegInf) return kNegInf;
  const double reverse = lfy + prop.log_q(y, x);
  if (reverse == kNegInf) return kNegInf;
  return std::min(0.0, reverse - forward);
}

template <class State>
struct StepResult {
  State state;
  bool accepted;
  double log_alpha;
};

/// One Metropolis-Hastings transition from x. Acceptance compares log U with
/// log alpha; one uniform is consumed per step regardless of the outcome.
inline StepResult<Point> mh_step(const TargetDensity& target, const ProposalKernel& prop, const Point& x,
                                 RngStream& rng) {
  Point y = prop.sample(x, rng);
  const double la = acceptance_log(target, prop, x, y);
  const double log_u = std::log(rng.uniform());
  if (log_u < la) return {std::move(y), true, la};
  return {x, false, la};
}

inline Trace<Point> run_mh(const TargetDensity& target, const ProposalKernel& prop, const Point& start,
                           std::uint64_t steps, RngStream& rng) {
  Trace<Point> trace(start);
  Point x = start;
  for (std::uint64_t n = 1; n <= steps; ++n) {
    auto r = mh_step(target, prop, x, rng);
    x = r.state;
    trace.record({n, Direction::full(), r.accepted, std::move(r.state)});
  }
  return trace;
}

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::uint64_t draws = 0;
};

/// Monte Carlo estimate of the rejection probability
/// r(x) = integral of q(x,y) [1 - alpha(x,y)] dy, averaging 1 - alpha over
/// proposal draws.
inline MonteCarloEstimate rejection_prob(const TargetDensity& target, const ProposalKernel& prop,
                                         const Point& x, std::uint64_t budget, RngStream& rng) {
  if (budget < 1000) throw InvalidInput("rejection_prob budget must be at least 1000 draws");
  if (target.log_density(x) == kNegInf) throw InvalidInput("rejection_prob start must lie in the support");
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t k = 0; k < budget; ++k) {
    const Point y = prop.sample(x, rng);
    const double reject = 1.0 - std::exp(acceptance_log(target, prop, x, y));
    sum += reject;
    sum_sq += reject * reject;
  }
  const double n = static_cast<double>(budget);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), budget};
}

/// Both sides of the detailed-balance identity in log domain:
/// log f(x) + log q(x,y) + log alpha(x,y) versus the same with x and y swapped.
struct BalanceSides {
  double lhs;
  double rhs;

  double gap() const {
    if (lhs == kNegInf && rhs == kNegInf) return 0.0;
    return std::abs(lhs - rhs);
  }
};

inline BalanceSides detailed_balance(const TargetDensity& target, const ProposalKernel& prop, const Point& x,
                                     const Point& y) {
  return {target.log_density(x) + prop.log_q(x, y) + acceptance_log(target, prop, x, y),
          target.log_density(y) + prop.log_q(y, x) + acceptance_log(target, prop, y, x)};
}

}  // namespace harris
