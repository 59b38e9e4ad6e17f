#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>

#include "harris/error.hpp"

namespace harris {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // |I_L - I_{L-1}| at the last level
  double l1 = 0.0;     // same rule applied to |f|
  int levels = 0;
  bool converged = false;
};

/// Double-exponential (tanh-sinh) rule on a finite interval [a, b].
///
/// Nodes are placed by their distance to the nearer endpoint, computed in
/// complement form, so integrands concentrated within 1e-300 of an endpoint
/// are still resolved. The step halves each level; only new nodes are
/// evaluated. Converged once L >= 3 and |I_L - I_{L-1}| <= tol * L1.
template <class F>
QuadResult tanh_sinh(F&& f, double a, double b, double tol = 1e-10, int max_levels = 12) {
  if (!(b > a) || !std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("tanh-sinh needs a finite interval with a < b");
  constexpr double t_max = 6.5;
  constexpr double half_pi = std::numbers::pi / 2.0;
  const double half = 0.5 * (b - a);

  // Contribution of the node pair at +t and -t (or the centre when t = 0).
  double sum = 0.0, sum_abs = 0.0;
  auto add_node = [&](double t) {
    const double u = half_pi * std::sinh(t);
    const double e = std::exp(-2.0 * u);  // u >= 0 here
    const double comp = half * 2.0 * e / (1.0 + e);  // distance from the endpoint: half * (1 - tanh u)
    const double w = half * half_pi * std::cosh(t) * 4.0 * e / ((1.0 + e) * (1.0 + e));
    if (!(w > 0.0)) return;
    if (t == 0.0) {
      const double v = f(a + half);
      sum += w * v;
      sum_abs += w * std::abs(v);
      return;
    }
    const double xr = b - comp, xl = a + comp;
    if (xr < b && xr > a) {
      const double v = f(xr);
      sum += w * v;
      sum_abs += w * std::abs(v);
    }
    if (xl > a && xl < b) {
      const double v = f(xl);
      sum += w * v;
      sum_abs += w * std::abs(v);
    }
  };

  QuadResult r;
  double h = 1.0;
  for (double t = 0.0; t <= t_max; t += 1.0) add_node(t);
  double prev = h * sum;
  r.value = prev;
  r.l1 = h * sum_abs;
  r.error = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= max_levels; ++level) {
    h *= 0.5;
    for (double t = h; t <= t_max; t += 2.0 * h) add_node(t);
    r.value = h * sum;
    r.l1 = h * sum_abs;
    r.error = std::abs(r.value - prev);
    r.levels = level;
    prev = r.value;
    if (!std::isfinite(r.value)) return r;
    if (level >= 3 && r.error <= tol * r.l1) {
      r.converged = true;
      return r;
    }
  }
  return r;
}

}  // namespace harris
