#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "harris/core.hpp"
#include "harris/mwg.hpp"
#include "harris/rng.hpp"
#include "harris/trace.hpp"

namespace harris {

/// One model of a trans-dimensional target. `density` must be normalized:
/// the between-model acceptance compares densities of different models
/// directly, so normalizing constants do not cancel.
struct ModelSpec {
  std::size_t id;
  TargetDensity density;
  double probability;
};

/// pi(m, dx) = p(m) f_m(x) dx over a finite union of spaces.
class TransDimTarget {
 public:
  explicit TransDimTarget(std::vector<ModelSpec> models) : models_(std::move(models)) {
    if (models_.size() < 2) throw InvalidInput("a trans-dimensional target needs more than one model");
    double total = 0.0;
    for (std::size_t k = 0; k < models_.size(); ++k) {
      const auto& m = models_[k];
      if (!(m.probability > 0.0)) throw InvalidInput("model probabilities must be positive");
      if (index_.contains(m.id)) throw InvalidInput("duplicate model id " + std::to_string(m.id));
      index_[m.id] = k;
      total += m.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("model probabilities must sum to 1");
  }

  std::size_t size() const noexcept { return models_.size(); }
  const std::vector<ModelSpec>& models() const noexcept { return models_; }
  bool contains(std::size_t id) const { return index_.contains(id); }

  const ModelSpec& model(std::size_t id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw InvalidInput("unknown model id " + std::to_string(id));
    return models_[it->second];
  }
  std::size_t position(std::size_t id) const {
    model(id);
    return index_.at(id);
  }
  std::size_t dim(std::size_t id) const { return model(id).density.dim(); }
  double log_p(std::size_t id) const { return std::log(model(id).probability); }

 private:
  std::vector<ModelSpec> models_;
  std::map<std::size_t, std::size_t> index_;
};

struct TransDimState {
  std::size_t model;
  Point x;

  friend bool operator==(const TransDimState&, const TransDimState&) = default;
};

/// CSV coordinates of (m, x): the model id followed by x.
inline std::string format_coords(const TransDimState& s) {
  return std::to_string(s.model) + ';' + format_coords(s.x);
}

/// Model proposal kernel R(m, m') over the models of a target.
class ModelJumpKernel {
 public:
  /// `probs[a][b]` is R between the a-th and b-th model of `target`.
  ModelJumpKernel(const TransDimTarget& target, std::vector<std::vector<double>> probs) {
    const std::size_t k = target.size();
    if (probs.size() != k) throw InvalidInput("model kernel must have one row per model");
    for (const auto& spec : target.models()) ids_.push_back(spec.id);
    for (std::size_t a = 0; a < k; ++a) {
      if (probs[a].size() != k) throw InvalidInput("model kernel must be square");
      double row = 0.0;
      for (double p : probs[a]) {
        if (p < 0.0 || p > 1.0) throw InvalidInput("model kernel entries must lie in [0,1]");
        row += p;
      }
      if (std::abs(row - 1.0) > 1e-12) throw InvalidInput("model kernel rows must sum to 1");
    }
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        if ((probs[a][b] > 0.0) != (probs[b][a] > 0.0))
          throw InvalidInput("model kernel must satisfy R(m,m') > 0 iff R(m',m) > 0");
    probs_ = std::move(probs);
  }

  /// R(m, m') = 1/#neighbours over models adjacent in list order.
  static ModelJumpKernel uniform_neighbours(const TransDimTarget& target) {
    const std::size_t k = target.size();
    std::vector<std::vector<double>> p(k, std::vector<double>(k, 0.0));
    for (std::size_t a = 0; a < k; ++a) {
      std::vector<std::size_t> nb;
      if (a > 0) nb.push_back(a - 1);
      if (a + 1 < k) nb.push_back(a + 1);
      for (auto b : nb) p[a][b] = 1.0 / static_cast<double>(nb.size());
    }
    return {target, std::move(p)};
  }

  /// R(m, m') = 1/(K-1) for every m' != m.
  static ModelJumpKernel uniform_others(const TransDimTarget& target) {
    const std::size_t k = target.size();
    std::vector<std::vector<double>> p(k, std::vector<double>(k, 1.0 / static_cast<double>(k - 1)));
    for (std::size_t a = 0; a < k; ++a) p[a][a] = 0.0;
    return {target, std::move(p)};
  }

  double prob(std::size_t from_id, std::size_t to_id) const { return probs_[pos(from_id)][pos(to_id)]; }
  double log_R(std::size_t from_id, std::size_t to_id) const {
    const double p = prob(from_id, to_id);
    return p > 0.0 ? std::log(p) : kNegInf;
  }

  std::size_t sample(std::size_t from_id, RngStream& rng) const {
    const auto& row = probs_[pos(from_id)];
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t b = 0; b < row.size(); ++b) {
      if (row[b] <= 0.0) continue;
      acc += row[b];
      last = b;
      if (u < acc) return ids_[b];
    }
    return ids_[last];
  }

 private:
  std::size_t pos(std::size_t id) const {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) throw InvalidInput("unknown model id " + std::to_string(id));
    return static_cast<std::size_t>(it - ids_.begin());
  }

  std::vector<std::size_t> ids_;
  std::vector<std::vector<double>> probs_;
};

/// Strictly monotone differentiable map on one coordinate, with its inverse.
/// Domain violations throw InvalidInput.
struct ScalarMap {
  std::function<double(double)> forward;
  std::function<double(double)> inverse;
  std::function<double(double)> log_derivative;          // log |forward'(x)|
  std::function<double(double)> inverse_log_derivative;  // log |inverse'(y)|

  static ScalarMap identity() {
    auto zero = [](double) { return 0.0; };
    return {[](double x) { return x; }, [](double y) { return y; }, zero, zero};
  }

  /// logit: (0,1) -> R, inverse logistic.
  static ScalarMap logit() {
    auto check = [](double u) {
      if (!(u > 0.0 && u < 1.0)) throw InvalidInput("logit map is only defined on (0,1)");
    };
    return {[check](double u) {
              check(u);
              return std::log(u) - std::log1p(-u);
            },
            [](double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); },
            [check](double u) {
              check(u);
              return -std::log(u) - std::log1p(-u);
            },
            // logistic'(t) = e^{-|t|} / (1 + e^{-|t|})^2
            [](double t) { return -std::abs(t) - 2.0 * std::log1p(std::exp(-std::abs(t))); }};
  }

  ScalarMap inverted() const { return {inverse, forward, inverse_log_derivative, log_derivative}; }
};

/// Coordinate-preserving dimension-matching maps h_ij = h_ij^(1) x h_ij^(2) x ...
///
/// Maps are registered for one orientation of each model pair; the opposite
/// orientation is the coordinatewise inverse. Coordinates with no registered
/// map use the identity.
class CoordinateMaps {
 public:
  void set(std::size_t from_id, std::size_t to_id, std::vector<ScalarMap> per_coordinate) {
    if (maps_.contains({to_id, from_id})) throw InvalidInput("maps for this model pair are already registered");
    maps_[{from_id, to_id}] = std::move(per_coordinate);
  }

  /// Map for coordinate `l` (0-based) when moving from model i to model j.
  ScalarMap coordinate_map(std::size_t i, std::size_t j, std::size_t l) const {
    if (auto it = maps_.find({i, j}); it != maps_.end())
      return l < it->second.size() ? it->second[l] : ScalarMap::identity();
    if (auto it = maps_.find({j, i}); it != maps_.end())
      return l < it->second.size() ? it->second[l].inverted() : ScalarMap::identity();
    return ScalarMap::identity();
  }

  /// Logit on every coordinate the higher-dimensional model adds, identity on
  /// shared coordinates, for every ordered pair of distinct models.
  static CoordinateMaps logistic_raising(const TransDimTarget& target) {
    CoordinateMaps maps;
    for (const auto& a : target.models())
      for (const auto& b : target.models()) {
        const std::size_t da = a.density.dim(), db = b.density.dim();
        if (a.id == b.id || da > db || (da == db && a.id > b.id)) continue;
        std::vector<ScalarMap> per(db, ScalarMap::identity());
        for (std::size_t l = da; l < db; ++l) per[l] = ScalarMap::logit();
        maps.set(a.id, b.id, std::move(per));
      }
    return maps;
  }

 private:
  std::map<std::pair<std::size_t, std::size_t>, std::vector<ScalarMap>> maps_;
};

struct MappedPoint {
  std::vector<double> x;
  double log_jacobian;
};

/// Applies h_ij coordinatewise to an extended point with max(d_i, d_j)
/// coordinates and returns the image with sum_l log |h_ij^(l)'(x_l)|.
inline MappedPoint apply_map(const CoordinateMaps& maps, std::size_t i, std::size_t j, std::span<const double> x) {
  MappedPoint out{std::vector<double>(x.size()), 0.0};
  for (std::size_t l = 0; l < x.size(); ++l) {
    const ScalarMap h = maps.coordinate_map(i, j, l);
    out.x[l] = h.forward(x[l]);
    out.log_jacobian += h.log_derivative(x[l]);
  }
  return out;
}

/// Running counters for auxiliary Uniform(0,1) coordinates.
struct AuxiliaryCounters {
  std::uint64_t between_proposals = 0;
  std::uint64_t materialized = 0;  // fresh uniforms drawn for dimension raising
};

struct BetweenModelProposal {
  TransDimState proposed;
  double log_ratio;  // unclipped log acceptance ratio
};

/// Deterministic part of a between-model proposal: maps the extended point
/// (x, aux) from model m to model `to` and evaluates the reversible-jump
/// ratio p(m') f_m'(x') R(m',m) / (p(m) f_m(x) R(m,m')) times the Jacobian.
/// Coordinates dropped when lowering are auxiliary uniforms in the target
/// model and must land in (0,1).
inline BetweenModelProposal between_model_proposal(const TransDimTarget& target, const ModelJumpKernel& R,
                                                   const CoordinateMaps& maps, const TransDimState& s,
                                                   std::span<const double> aux, std::size_t to) {
  const std::size_t d_from = target.dim(s.model), d_to = target.dim(to);
  if (s.x.dim() != d_from) throw InvalidInput("state dimension does not match its model");
  if (aux.size() != (d_to > d_from ? d_to - d_from : 0)) throw InvalidInput("wrong number of auxiliary coordinates");
  std::vector<double> ext(s.x.vec());
  ext.insert(ext.end(), aux.begin(), aux.end());
  MappedPoint mapped = apply_map(maps, s.model, to, ext);
  bool aux_ok = true;
  for (std::size_t l = d_to; l < mapped.x.size(); ++l) aux_ok = aux_ok && mapped.x[l] > 0.0 && mapped.x[l] < 1.0;
  for (double c : mapped.x)
    if (!std::isfinite(c)) aux_ok = false;
  mapped.x.resize(d_to);
  if (!aux_ok) {
    // Keep a representable state; it is never accepted.
    return {{to, Point(std::vector<double>(d_to, 0.5))}, kNegInf};
  }
  Point x_to(std::move(mapped.x));
  const double lf_to = target.model(to).density.log_density(x_to);
  const double lf_from = target.model(s.model).density.log_density(s.x);
  double log_ratio = kNegInf;
  if (lf_to != kNegInf) {
    log_ratio = (target.log_p(to) - target.log_p(s.model)) + (lf_to - lf_from) +
                (R.log_R(to, s.model) - R.log_R(s.model, to)) + mapped.log_jacobian;
  }
  return {{to, std::move(x_to)}, log_ratio};
}

struct BetweenModelStep {
  TransDimState state;
  std::size_t proposed_model;
  bool accepted;
  double log_alpha;
};

/// Proposes m' ~ R(m, .), draws fresh uniforms for any added coordinates, and
/// accepts the mapped state with the reversible-jump probability.
inline BetweenModelStep between_model_step(const TransDimTarget& target, const ModelJumpKernel& R,
                                                      const CoordinateMaps& maps, const TransDimState& s,
                                                      RngStream& rng, AuxiliaryCounters* counters = nullptr) {
  const std::size_t to = R.sample(s.model, rng);
  const std::size_t d_from = target.dim(s.model), d_to = target.dim(to);
  std::vector<double> aux;
  for (std::size_t l = d_from; l < d_to; ++l) aux.push_back(rng.uniform());
  if (counters) {
    ++counters->between_proposals;
    counters->materialized += aux.size();
  }
  BetweenModelProposal prop = between_model_proposal(target, R, maps, s, aux, to);
  const double la = std::min(0.0, prop.log_ratio);
  const double log_u = std::log(rng.uniform());
  if (log_u < la) return {std::move(prop.proposed), to, true, la};
  return {s, to, false, la};
}

/// Probability of attempting a between-model move. Must lie in (0,1);
/// `always_between()` exists for tests that isolate the model-jump kernel.
class MixingProbability {
 public:
  explicit MixingProbability(double a) : a_(a) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidInput("mixing probability a must lie in (0,1)");
  }
  static MixingProbability always_between() { return MixingProbability(Unchecked{}, 1.0); }
  double value() const noexcept { return a_; }

 private:
  struct Unchecked {};
  MixingProbability(Unchecked, double a) : a_(a) {}
  double a_;
};

enum class MoveKind { between, within };

struct TransDimStep {
  TransDimState state;
  MoveKind kind;
  Direction direction;
  bool accepted;
};

/// Per-model random-scan samplers for within-model moves.
using WithinModelSamplers = std::map<std::size_t, CoordinateSampler>;

inline TransDimStep transdim_step(const TransDimTarget& target, const ModelJumpKernel& R, const CoordinateMaps& maps,
                                  MixingProbability a, const WithinModelSamplers& within, const TransDimState& s,
                                  RngStream& rng, AuxiliaryCounters* counters = nullptr) {
  if (rng.uniform() < a.value()) {
    auto r = between_model_step(target, R, maps, s, rng, counters);
    return {std::move(r.state), MoveKind::between, Direction::model(r.proposed_model), r.accepted};
  }
  auto it = within.find(s.model);
  if (it == within.end()) throw InvalidInput("no within-model sampler for model " + std::to_string(s.model));
  if (it->second.schedule().kind != ScanSchedule::Kind::random)
    throw InvalidInput("within-model moves use a random scan");
  auto r = mwg_step(target.model(s.model).density, it->second, 1, s.x, rng);
  return {{s.model, std::move(r.state)}, MoveKind::within, Direction::coordinate(r.direction), r.accepted};
}

inline Trace<TransDimState> run_transdim(const TransDimTarget& target, const ModelJumpKernel& R,
                                         const CoordinateMaps& maps, MixingProbability a,
                                         const WithinModelSamplers& within, const TransDimState& start,
                                         std::uint64_t steps, RngStream& rng, AuxiliaryCounters* counters = nullptr) {
  Trace<TransDimState> trace(start);
  TransDimState s = start;
  for (std::uint64_t n = 1; n <= steps; ++n) {
    auto r = transdim_step(target, R, maps, a, within, s, rng, counters);
    s = r.state;
    trace.record({n, r.direction, r.accepted, std::move(r.state)});
  }
  return trace;
}

/// Monitoring data for the two recurrence hypotheses on a trans-dimensional
/// run: whether any within-model move was ever accepted, and when each
/// coordinate of the starting model first had a within-model move accepted.
struct HypothesisReport {
  std::optional<std::uint64_t> first_within_accept;
  std::vector<std::optional<std::uint64_t>> coordinate_first_accept;

  bool no_within_move_accepted() const { return !first_within_accept.has_value(); }
  bool all_coordinates_covered() const {
    return std::all_of(coordinate_first_accept.begin(), coordinate_first_accept.end(),
                       [](const auto& v) { return v.has_value(); });
  }
};

inline HypothesisReport theorem_hypothesis_monitor(const Trace<TransDimState>& trace) {
  if (trace.empty()) throw InvalidInput("hypothesis monitor needs a nonempty trace");
  HypothesisReport rep;
  rep.coordinate_first_accept.resize(trace.initial().x.dim());
  for (const auto& e : trace.events()) {
    if (!e.accepted || e.direction.kind != Direction::Kind::coordinate) continue;
    if (!rep.first_within_accept) rep.first_within_accept = e.step;
    const std::size_t l = e.direction.index;
    if (l < rep.coordinate_first_accept.size() && !rep.coordinate_first_accept[l])
      rep.coordinate_first_accept[l] = e.step;
  }
  return rep;
}

/// Nested Gaussian family: model m has dimension m and a standard normal
/// density on R^m; neighbours-only model jumps and logit raising maps.
struct ToyFamilyConfig {
  std::size_t model_count = 3;
  std::vector<double> p = {0.5, 0.3, 0.2};
  double a = 0.5;
  double within_scale = 1.0;
};

struct ToyFamily {
  TransDimTarget target;
  ModelJumpKernel R;
  CoordinateMaps maps;
  MixingProbability a;
  WithinModelSamplers within;
};

inline TargetDensity standard_normal_target(std::size_t d) {
  return TargetDensity(
      d, [](std::span<const double>) { return true; },
      [](std::span<const double> x) {
        double s = 0.0;
        for (double c : x) s += standard_normal_log_pdf(c);
        return s;
      });
}

inline ToyFamily make_toy_family(const ToyFamilyConfig& cfg) {
  if (cfg.model_count < 2) throw InvalidInput("toy family needs at least two models");
  if (cfg.p.size() != cfg.model_count) throw InvalidInput("toy family needs one probability per model");
  std::vector<ModelSpec> models;
  for (std::size_t m = 1; m <= cfg.model_count; ++m) models.push_back({m, standard_normal_target(m), cfg.p[m - 1]});
  TransDimTarget target(std::move(models));
  auto R = ModelJumpKernel::uniform_neighbours(target);
  auto maps = CoordinateMaps::logistic_raising(target);
  WithinModelSamplers within;
  for (std::size_t m = 1; m <= cfg.model_count; ++m) {
    std::vector<CoordinateProposal> props;
    for (std::size_t i = 0; i < m; ++i) props.push_back(normal_coordinate_proposal(i, cfg.within_scale));
    within.emplace(m, CoordinateSampler(std::move(props), ScanSchedule::random()));
  }
  return {std::move(target), std::move(R), std::move(maps), MixingProbability(cfg.a), std::move(within)};
}

}  // namespace harris
