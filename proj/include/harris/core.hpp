#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "harris/error.hpp"

namespace harris {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A point of R^d with finite coordinates.
class Point {
 public:
  Point(std::initializer_list<double> coords) : coords_(coords) { validate(); }
  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) { validate(); }

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }
  const std::vector<double>& vec() const noexcept { return coords_; }

  /// Copy of this point with coordinate `i` replaced by `value`.
  Point with_coord(std::size_t i, double value) const {
    if (i >= coords_.size()) throw InvalidInput("coordinate index out of range");
    if (!std::isfinite(value)) throw InvalidInput("non-finite coordinate");
    Point out = *this;
    out.coords_[i] = value;
    return out;
  }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  void validate() const {
    if (coords_.empty()) throw InvalidInput("point must have at least one coordinate");
    for (double c : coords_)
      if (!std::isfinite(c)) throw InvalidInput("point coordinates must be finite");
  }

  std::vector<double> coords_;
};

/// Axis-aligned hull of a support set; open bounds, infinite by default.
struct SupportBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static SupportBounds unbounded(std::size_t d) {
    return {std::vector<double>(d, kNegInf), std::vector<double>(d, kInf)};
  }
};

/// Unnormalized log-density on an open subset of R^d.
///
/// The support predicate and the log-density must agree: `log_f` is only
/// consulted on the support, and everything off the support evaluates to the
/// single -inf sentinel.
class TargetDensity {
 public:
  using Predicate = std::function<bool(std::span<const double>)>;
  using LogDensity = std::function<double(std::span<const double>)>;

  TargetDensity(std::size_t dim, Predicate support, LogDensity log_f)
      : TargetDensity(dim, std::move(support), std::move(log_f), SupportBounds::unbounded(dim)) {}

  TargetDensity(std::size_t dim, Predicate support, LogDensity log_f, SupportBounds bounds)
      : dim_(dim), support_(std::move(support)), log_f_(std::move(log_f)), bounds_(std::move(bounds)) {
    if (dim_ == 0) throw InvalidInput("target dimension must be positive");
    if (!support_ || !log_f_) throw InvalidInput("target needs a support predicate and a log-density");
    if (bounds_.lower.size() != dim_ || bounds_.upper.size() != dim_)
      throw InvalidInput("support bounds must have one entry per coordinate");
  }

  std::size_t dim() const noexcept { return dim_; }
  const SupportBounds& bounds() const noexcept { return bounds_; }

  bool in_support(std::span<const double> x) const { return support_(x); }

  /// log f(x), or -inf off the support. Never NaN.
  double log_density(std::span<const double> x) const {
    if (x.size() != dim_) throw InvalidInput("point dimension does not match target dimension");
    if (!support_(x)) return kNegInf;
    const double v = log_f_(x);
    if (std::isnan(v)) throw NumericalError("log-density evaluated to NaN");
    return v;
  }

  double log_density(const Point& x) const { return log_density(x.coords()); }

 private:
  std::size_t dim_;
  Predicate support_;
  LogDensity log_f_;
  SupportBounds bounds_;
};

inline double log_density(const TargetDensity& target, const Point& x) {
  return target.log_density(x);
}

/// Numerically stable log(exp(a) + exp(b)).
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace harris
