#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "harris/core.hpp"
#include "harris/metropolis.hpp"
#include "harris/rng.hpp"
#include "harris/trace.hpp"

namespace harris {

/// One-coordinate proposal: replaces coordinate `index` of x by z ~ q_i(x, .).
/// `log_q(x, z)` is the log-density of proposing z from the full point x.
struct CoordinateProposal {
  std::size_t index = 0;
  std::function<double(const Point&, RngStream&)> sample_z;
  std::function<double(const Point&, double)> log_q;
};

inline CoordinateProposal normal_coordinate_proposal(std::size_t i, double scale = 1.0) {
  if (!(scale > 0.0)) throw InvalidInput("proposal scale must be positive");
  return {i,
          [i, scale](const Point& x, RngStream& rng) { return x[i] + scale * rng.normal(); },
          [i, scale](const Point& x, double z) {
            return standard_normal_log_pdf((z - x[i]) / scale) - std::log(scale);
          }};
}

/// z ~ Uniform[x_i - half_width, x_i + half_width].
inline CoordinateProposal uniform_coordinate_proposal(std::size_t i, double half_width = 1.0) {
  if (!(half_width > 0.0)) throw InvalidInput("proposal half-width must be positive");
  const double log_density = -std::log(2.0 * half_width);
  return {i,
          [i, half_width](const Point& x, RngStream& rng) { return rng.uniform(x[i] - half_width, x[i] + half_width); },
          [i, half_width, log_density](const Point& x, double z) {
            return std::abs(z - x[i]) <= half_width ? log_density : kNegInf;
          }};
}

/// Proposal drawing coordinate i from its full conditional, so every move is
/// accepted. `log_conditional(x, z)` must be the normalized conditional
/// log-density of z given the other coordinates of x.
inline CoordinateProposal gibbs_conditional_proposal(std::size_t i,
                                                     std::function<double(const Point&, RngStream&)> draw,
                                                     std::function<double(const Point&, double)> log_conditional) {
  return {i, std::move(draw), std::move(log_conditional)};
}

struct ScanSchedule {
  enum class Kind { random, deterministic };
  Kind kind = Kind::random;

  static ScanSchedule random() { return {Kind::random}; }
  static ScanSchedule deterministic() { return {Kind::deterministic}; }
};

/// Metropolis-within-Gibbs configuration: one proposal per coordinate, a scan
/// rule, and the set of directions the scan may choose from (all of them
/// unless restricted to a subchain).
class CoordinateSampler {
 public:
  CoordinateSampler(std::vector<CoordinateProposal> proposals, ScanSchedule schedule)
      : proposals_(std::move(proposals)), schedule_(schedule) {
    if (proposals_.empty()) throw InvalidInput("need at least one coordinate proposal");
    for (std::size_t i = 0; i < proposals_.size(); ++i) {
      if (proposals_[i].index != i) throw InvalidInput("proposal list must hold coordinate i at position i");
      if (!proposals_[i].sample_z || !proposals_[i].log_q) throw InvalidInput("incomplete coordinate proposal");
      active_.push_back(i);
    }
  }

  std::size_t dim() const noexcept { return proposals_.size(); }
  const std::vector<CoordinateProposal>& proposals() const noexcept { return proposals_; }
  const CoordinateProposal& proposal(std::size_t i) const { return proposals_.at(i); }
  const std::vector<std::size_t>& active() const noexcept { return active_; }
  ScanSchedule schedule() const noexcept { return schedule_; }

  /// Direction for step n (1-based). Random scan draws one index from rng.
  std::size_t direction(std::uint64_t n, RngStream& rng) const {
    if (schedule_.kind == ScanSchedule::Kind::deterministic) return active_[(n - 1) % active_.size()];
    return active_[rng.uniform_index(active_.size())];
  }

  friend CoordinateSampler restrict_subchain(const CoordinateSampler& sampler, std::vector<std::size_t> directions);

 private:
  std::vector<CoordinateProposal> proposals_;
  ScanSchedule schedule_;
  std::vector<std::size_t> active_;
};

/// Subchain configuration that only ever proposes moves in `directions`.
/// Coordinates outside the set stay fixed for the whole run.
inline CoordinateSampler restrict_subchain(const CoordinateSampler& sampler, std::vector<std::size_t> directions) {
  if (directions.empty()) throw InvalidInput("subchain direction set must be nonempty");
  std::sort(directions.begin(), directions.end());
  directions.erase(std::unique(directions.begin(), directions.end()), directions.end());
  if (directions.back() >= sampler.dim()) throw InvalidInput("subchain direction out of range");
  CoordinateSampler out = sampler;
  out.active_ = std::move(directions);
  return out;
}

/// log alpha_i(x, y) for y = x with coordinate i set to z.
inline double coord_acceptance_log(const TargetDensity& target, const CoordinateProposal& cp, const Point& x,
                                   double z) {
  const double forward = target.log_density(x) + cp.log_q(x, z);
  if (forward == kNegInf) return 0.0;
  const Point y = x.with_coord(cp.index, z);
  const double lfy = target.log_density(y);
  if (lfy == kNegInf) return kNegInf;
  const double reverse = lfy + cp.log_q(y, x[cp.index]);
  if (reverse == kNegInf) return kNegInf;
  return std::min(0.0, reverse - forward);
}

struct CoordinateStep {
  Point state;
  std::size_t direction;
  bool accepted;
  double log_alpha;
};

/// One Metropolis-within-Gibbs transition at step n (1-based).
inline CoordinateStep mwg_step(const TargetDensity& target, const CoordinateSampler& sampler, std::uint64_t n,
                               const Point& x, RngStream& rng) {
  if (sampler.dim() != target.dim()) throw InvalidInput("sampler and target dimensions differ");
  const std::size_t i = sampler.direction(n, rng);
  const CoordinateProposal& cp = sampler.proposal(i);
  const double z = cp.sample_z(x, rng);
  const double la = std::isfinite(z) ? coord_acceptance_log(target, cp, x, z) : kNegInf;
  const double log_u = std::log(rng.uniform());
  if (log_u < la) return {x.with_coord(i, z), i, true, la};
  return {x, i, false, la};
}

inline Trace<Point> run_mwg(const TargetDensity& target, const CoordinateSampler& sampler, const Point& start,
                            std::uint64_t steps, RngStream& rng) {
  Trace<Point> trace(start);
  Point x = start;
  for (std::uint64_t n = 1; n <= steps; ++n) {
    auto r = mwg_step(target, sampler, n, x, rng);
    x = r.state;
    trace.record({n, Direction::coordinate(r.direction), r.accepted, std::move(r.state)});
  }
  return trace;
}

/// Chain adapter for the generic diagnostics (escape estimation, drift).
struct MwgChain {
  const TargetDensity* target;
  CoordinateSampler sampler;

  MwgChain(const TargetDensity& t, CoordinateSampler s) : target(&t), sampler(std::move(s)) {}

  Point step(const Point& x, std::uint64_t n, RngStream& rng) const {
    return mwg_step(*target, sampler, n, x, rng).state;
  }
};

/// The coordinate proposal viewed as a (degenerate) full-dimensional kernel,
/// for use with rejection_prob.
inline ProposalKernel as_proposal_kernel(const CoordinateProposal& cp) {
  return {[cp](const Point& x, RngStream& rng) { return x.with_coord(cp.index, cp.sample_z(x, rng)); },
          [cp](const Point& x, const Point& y) { return cp.log_q(x, y[cp.index]); }};
}

/// Per-coordinate detailed balance sides for the move x -> x with coord i = z.
inline BalanceSides coordinate_balance(const TargetDensity& target, const CoordinateProposal& cp, const Point& x,
                                       double z) {
  const Point y = x.with_coord(cp.index, z);
  return {target.log_density(x) + cp.log_q(x, z) + coord_acceptance_log(target, cp, x, z),
          target.log_density(y) + cp.log_q(y, x[cp.index]) + coord_acceptance_log(target, cp, y, x[cp.index])};
}

}  // namespace harris
