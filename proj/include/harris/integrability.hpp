#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harris/core.hpp"
#include "harris/error.hpp"
#include "harris/quadrature.hpp"

namespace harris {

/// Coordinate hyperplane: the coordinates in `fixed` are pinned, the rest are
/// integrated over. Indices are 0-based.
class Hyperplane {
 public:
  Hyperplane(std::size_t d, std::map<std::size_t, double> fixed) : d_(d), fixed_(std::move(fixed)) {
    if (d == 0) throw InvalidInput("hyperplane dimension must be at least 1");
    for (const auto& [i, v] : fixed_) {
      if (i >= d) throw InvalidInput("fixed coordinate index out of range");
      if (!std::isfinite(v)) throw InvalidInput("fixed coordinate value must be finite");
    }
    for (std::size_t i = 0; i < d; ++i)
      if (!fixed_.count(i)) free_.push_back(i);
    if (free_.empty()) throw InvalidInput("hyperplane must leave at least one coordinate free");
  }
  static Hyperplane whole_space(std::size_t d) { return Hyperplane(d, {}); }

  std::size_t dim() const { return d_; }
  const std::map<std::size_t, double>& fixed() const { return fixed_; }
  const std::vector<std::size_t>& free() const { return free_; }

 private:
  std::size_t d_;
  std::map<std::size_t, double> fixed_;
  std::vector<std::size_t> free_;
};

struct QuadratureSettings {
  int k_max = 12;                    // largest box is [-2^k_max, 2^k_max]^r
  int pieces_per_shell = 1;          // subdivisions of each dyadic segment
  double tolerance = 1e-10;          // requested relative tolerance per 1-d integral
  double accepted_error = 1e-6;      // relative error estimate above which a 1-d integral counts as failed
  int max_levels = 12;               // tanh-sinh halvings of the step size
  double divergence_threshold = 1e12;
  double finite_increment = 1e-6;

  /// Same plan at twice the resolution.
  QuadratureSettings doubled() const {
    QuadratureSettings s = *this;
    s.pieces_per_shell *= 2;
    s.max_levels += 1;
    s.tolerance *= 0.01;
    return s;
  }
};

enum class Verdict { finite, divergent, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::finite: return "finite";
    case Verdict::divergent: return "divergent";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct IntegrabilityReport {
  Verdict verdict = Verdict::inconclusive;
  std::vector<double> partial_integrals;  // S_k over [-2^k, 2^k]^r, k = 1, 2, ...
  std::vector<double> increments;         // S_k - S_{k-1}, computed directly over the new shell
  double growth = 0.0;                    // last increment ratio Δ_k / Δ_{k-1}
  std::string note;

  double value() const { return partial_integrals.empty() ? 0.0 : partial_integrals.back(); }
};

namespace detail {

/// Breakpoints of [-2^k, 2^k] clipped to [lo, hi]: 0, ±1, ±2, ..., ±2^k,
/// each dyadic segment split into `pieces` equal parts. Segment s belongs to
/// shell max(0, ceil(log2 |endpoint|)).
struct Segment {
  double a, b;
  int shell;
};

inline std::vector<Segment> axis_segments(int k, int pieces, double lo, double hi) {
  std::vector<Segment> out;
  auto add = [&](double a, double b, int shell) {
    const double ca = std::max(a, lo), cb = std::min(b, hi);
    if (!(cb > ca)) return;
    for (int p = 0; p < pieces; ++p) {
      const double pa = ca + (cb - ca) * p / pieces;
      const double pb = p + 1 == pieces ? cb : ca + (cb - ca) * (p + 1) / pieces;
      out.push_back({pa, pb, shell});
    }
  };
  add(-1.0, 0.0, 1);
  add(0.0, 1.0, 1);
  for (int j = 1; j <= k; ++j) {
    const double inner = std::ldexp(1.0, j - 1), outer = std::ldexp(1.0, j);
    add(-outer, -inner, j);
    add(inner, outer, j);
  }
  return out;
}

class SliceIntegrator {
 public:
  SliceIntegrator(const TargetDensity& target, const Hyperplane& hp, const QuadratureSettings& s)
      : target_(target), hp_(hp), s_(s), point_(hp.dim(), 0.0) {
    for (const auto& [i, v] : hp.fixed()) point_[i] = v;
  }

  /// Integral of f over the product of `box` segments along the free axes.
  double integrate(const std::vector<Segment>& box) {
    ok_ = true;
    return level(0, box);
  }
  bool converged() const { return ok_; }

 private:
  double level(std::size_t axis, const std::vector<Segment>& box) {
    const std::size_t coord = hp_.free()[axis];
    auto g = [&, axis, coord](double t) {
      point_[coord] = t;
      if (axis + 1 == box.size()) return std::exp(target_.log_density(std::span<const double>(point_)));
      return level(axis + 1, box);
    };
    const auto q = tanh_sinh(g, box[axis].a, box[axis].b, s_.tolerance, s_.max_levels);
    if (!std::isfinite(q.value) || q.error > s_.accepted_error * q.l1) ok_ = false;
    const double v = q.value;
    return v;
  }

  const TargetDensity& target_;
  const Hyperplane& hp_;
  QuadratureSettings s_;
  std::vector<double> point_;
  bool ok_ = true;
};

}  // namespace detail

/// Integral of f over a coordinate hyperplane, over expanding boxes
/// [-2^k, 2^k]^r intersected with the support bounds.
///
/// Divergent: S_k above the threshold with the last two second differences
/// positive. Finite: k >= 4 and the last three relative increments below
/// `finite_increment`. Anything else, including quadrature that does not
/// converge, is inconclusive. A NaN density raises NumericalError.
inline IntegrabilityReport hyperplane_integral(const TargetDensity& target, const Hyperplane& hp,
                                               const QuadratureSettings& s = {}) {
  if (hp.dim() != target.dim()) throw InvalidInput("hyperplane and target dimensions differ");
  if (s.k_max < 4 || s.k_max > 60) throw InvalidInput("k_max must lie in [4, 60]");
  if (s.pieces_per_shell < 1) throw InvalidInput("pieces_per_shell must be at least 1");
  if (!(s.tolerance > 0.0) || !(s.accepted_error > 0.0)) throw InvalidInput("quadrature tolerances must be positive");

  IntegrabilityReport rep;
  const auto& bounds = target.bounds();
  for (const auto& [i, v] : hp.fixed()) {
    if (!(v > bounds.lower[i] && v < bounds.upper[i])) {
      rep.verdict = Verdict::finite;
      rep.partial_integrals.assign(1, 0.0);
      rep.increments.assign(1, 0.0);
      rep.note = "slice misses the support";
      return rep;
    }
  }

  const auto& free = hp.free();
  const std::size_t r = free.size();
  detail::SliceIntegrator integ(target, hp, s);
  double total = 0.0;
  for (int k = 1; k <= s.k_max; ++k) {
    std::vector<std::vector<detail::Segment>> axes(r);
    for (std::size_t a = 0; a < r; ++a) axes[a] = detail::axis_segments(k, s.pieces_per_shell, bounds.lower[free[a]], bounds.upper[free[a]]);

    // Only rectangles touching shell k are new relative to the previous box.
    double inc = 0.0;
    bool any_axis_empty = false;
    for (const auto& ax : axes) any_axis_empty = any_axis_empty || ax.empty();
    if (!any_axis_empty) {
      std::vector<std::size_t> idx(r, 0);
      std::vector<detail::Segment> box(r);
      while (true) {
        bool touches = false;
        for (std::size_t a = 0; a < r; ++a) {
          box[a] = axes[a][idx[a]];
          touches = touches || box[a].shell == k;
        }
        if (touches) {
          inc += integ.integrate(box);
          if (!integ.converged()) {
            rep.note = "quadrature did not converge on shell " + std::to_string(k);
            rep.verdict = Verdict::inconclusive;
            return rep;
          }
        }
        std::size_t a = 0;
        while (a < r && ++idx[a] == axes[a].size()) idx[a++] = 0;
        if (a == r) break;
      }
    }
    total += inc;
    rep.partial_integrals.push_back(total);
    rep.increments.push_back(inc);
    const std::size_t m = rep.increments.size();
    if (m >= 2 && rep.increments[m - 2] > 0.0) rep.growth = inc / rep.increments[m - 2];

    if (m >= 3 && total > s.divergence_threshold && rep.increments[m - 1] > rep.increments[m - 2] &&
        rep.increments[m - 2] > rep.increments[m - 3]) {
      rep.verdict = Verdict::divergent;
      return rep;
    }
    if (!std::isfinite(total)) {
      rep.note = "partial integral overflowed before the divergence rule applied";
      rep.verdict = Verdict::inconclusive;
      return rep;
    }
    if (k >= 4) {
      bool small = true;
      for (std::size_t j = m - 3; j < m; ++j) {
        const double rel = rep.partial_integrals[j] > 0.0 ? rep.increments[j] / rep.partial_integrals[j] : 0.0;
        small = small && rel < s.finite_increment;
      }
      if (small) {
        rep.verdict = Verdict::finite;
        return rep;
      }
    }
  }
  rep.note = "no verdict within k_max expansions";
  rep.verdict = Verdict::inconclusive;
  return rep;
}

}  // namespace harris
