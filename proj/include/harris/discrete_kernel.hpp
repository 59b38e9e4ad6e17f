#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "harris/error.hpp"
#include "harris/rng.hpp"

namespace harris {

struct Transition {
  std::size_t from;
  std::size_t to;
  double prob;
};

/// Row-stochastic transition matrix on a finite ordered state set, stored in
/// compressed rows. A truncated countable chain carries a bound on the
/// probability mass its truncation misrepresents.
class DiscreteKernel {
 public:
  DiscreteKernel(std::size_t n, std::vector<Transition> transitions, std::vector<std::string> labels = {},
                 std::optional<double> tail_bias_bound = std::nullopt)
      : n_(n), labels_(std::move(labels)), tail_bias_bound_(tail_bias_bound) {
    if (n_ == 0) throw InvalidInput("kernel needs at least one state");
    if (!labels_.empty() && labels_.size() != n_) throw InvalidInput("one label per state required");
    std::sort(transitions.begin(), transitions.end(),
              [](const Transition& a, const Transition& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
    row_ptr_.assign(n_ + 1, 0);
    std::size_t prev_row = n_;
    for (const auto& t : transitions) {
      if (t.from >= n_ || t.to >= n_) throw InvalidInput("transition references an unknown state");
      if (!(t.prob >= 0.0 && t.prob <= 1.0)) throw InvalidInput("transition probabilities must lie in [0,1]");
      if (t.prob == 0.0) continue;
      if (!cols_.empty() && prev_row == t.from && cols_.back() == t.to) {
        vals_.back() += t.prob;
        continue;
      }
      cols_.push_back(t.to);
      vals_.push_back(t.prob);
      prev_row = t.from;
      ++row_ptr_[t.from + 1];
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k];
      if (std::abs(s - 1.0) > 1e-12)
        throw InvalidInput("row " + std::to_string(i) + " sums to " + std::to_string(s) + ", not 1");
    }
  }

  static DiscreteKernel from_dense(const std::vector<std::vector<double>>& rows) {
    std::vector<Transition> t;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw InvalidInput("dense kernel must be square");
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        if (rows[i][j] != 0.0) t.push_back({i, j, rows[i][j]});
    }
    return DiscreteKernel(rows.size(), std::move(t));
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::string label(std::size_t i) const { return labels_.empty() ? std::to_string(i) : labels_[i]; }
  std::optional<double> tail_bias_bound() const noexcept { return tail_bias_bound_; }

  /// Nonzero entries of row i as (column, probability) pairs.
  std::vector<std::pair<std::size_t, double>> successors(std::size_t i) const {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out.emplace_back(cols_[k], vals_[k]);
    return out;
  }

  double prob(std::size_t i, std::size_t j) const {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (cols_[k] == j) return vals_[k];
    return 0.0;
  }

  /// out = v P. Rows where v vanishes are skipped.
  void left_multiply(const std::vector<double>& v, std::vector<double>& out) const {
    out.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double vi = v[i];
      if (vi == 0.0) continue;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out[cols_[k]] += vi * vals_[k];
    }
  }

  /// Draws X_n given X_{n-1} = i.
  std::size_t step(std::size_t i, std::uint64_t /*n*/, RngStream& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t k = row_ptr_[i];
    for (; k + 1 < row_ptr_[i + 1]; ++k) {
      acc += vals_[k];
      if (u < acc) return cols_[k];
    }
    return cols_[k];
  }

  template <class F>
  void for_each_entry(F&& f) const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) f(i, cols_[k], vals_[k]);
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
  std::vector<std::string> labels_;
  std::optional<double> tail_bias_bound_;
};

using Distribution = std::vector<double>;

inline Distribution point_mass(std::size_t n, std::size_t i) {
  Distribution d(n, 0.0);
  d.at(i) = 1.0;
  return d;
}

inline double total_variation(const Distribution& a, const Distribution& b) {
  if (a.size() != b.size()) throw InvalidInput("distributions over different state sets");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

inline void check_distribution(const DiscreteKernel& k, const Distribution& pi) {
  if (pi.size() != k.size()) throw InvalidInput("distribution size does not match the kernel");
  double s = 0.0;
  for (double p : pi) {
    if (p < 0.0) throw InvalidInput("distribution has a negative entry");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw InvalidInput("distribution does not sum to 1");
}

/// P^n(start, .) by repeated vector-matrix products.
inline Distribution law_after(const DiscreteKernel& k, std::size_t start, std::uint64_t n) {
  Distribution v = point_mass(k.size(), start), next;
  for (std::uint64_t t = 0; t < n; ++t) {
    k.left_multiply(v, next);
    v.swap(next);
  }
  return v;
}

/// ||P^t(start, .) - pi|| for t = 0..n.
inline std::vector<double> tv_sequence(const DiscreteKernel& k, std::size_t start, std::uint64_t n,
                                       const Distribution& pi) {
  check_distribution(k, pi);
  if (start >= k.size()) throw InvalidInput("start state out of range");
  std::vector<double> out;
  out.reserve(n + 1);
  Distribution v = point_mass(k.size(), start), next;
  out.push_back(total_variation(v, pi));
  for (std::uint64_t t = 0; t < n; ++t) {
    k.left_multiply(v, next);
    v.swap(next);
    out.push_back(total_variation(v, pi));
  }
  return out;
}

inline double tv_exact(const DiscreteKernel& k, std::size_t start, std::uint64_t n, const Distribution& pi) {
  check_distribution(k, pi);
  if (start >= k.size()) throw InvalidInput("start state out of range");
  return total_variation(law_after(k, start, n), pi);
}

/// Strongly connected components of the positive-probability graph, listed
/// in topological order of the condensation (a class precedes every class it
/// can reach). States inside a class are sorted.
inline std::vector<std::vector<std::size_t>> communicating_classes(const DiscreteKernel& k) {
  const std::size_t n = k.size();
  std::vector<std::vector<std::size_t>> adj(n);
  k.for_each_entry([&](std::size_t i, std::size_t j, double) { adj[i].push_back(j); });

  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> classes;
  std::size_t counter = 0;

  // Iterative Tarjan; frames hold (vertex, next edge position).
  std::vector<std::pair<std::size_t, std::size_t>> frames;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < adj[v].size()) {
        const std::size_t w = adj[v][pos++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<std::size_t> cls;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          cls.push_back(w);
        } while (w != done);
        std::sort(cls.begin(), cls.end());
        classes.push_back(std::move(cls));
      }
    }
  }
  // Tarjan emits sinks first.
  std::reverse(classes.begin(), classes.end());
  return classes;
}

/// True when no transition leaves the given class.
inline bool is_closed_class(const DiscreteKernel& k, const std::vector<std::size_t>& cls) {
  std::vector<bool> member(k.size(), false);
  for (auto s : cls) member[s] = true;
  for (auto s : cls)
    for (const auto& [j, p] : k.successors(s))
      if (!member[j]) return false;
  return true;
}

/// Period of an irreducible kernel: gcd over edges (u,v) of
/// level(u) + 1 - level(v), with levels from a breadth-first search.
inline std::uint64_t period(const DiscreteKernel& k) {
  if (communicating_classes(k).size() != 1)
    throw InvalidInput("period requires a single communicating class");
  const std::size_t n = k.size();
  constexpr std::int64_t kUnseen = -1;
  std::vector<std::int64_t> level(n, kUnseen);
  std::vector<std::size_t> queue{0};
  level[0] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h)
    for (const auto& [j, p] : k.successors(queue[h]))
      if (level[j] == kUnseen) {
        level[j] = level[queue[h]] + 1;
        queue.push_back(j);
      }
  std::int64_t g = 0;
  k.for_each_entry([&](std::size_t i, std::size_t j, double) { g = std::gcd(g, std::abs(level[i] + 1 - level[j])); });
  return static_cast<std::uint64_t>(g);
}

namespace detail {

inline double max_abs_residual(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& b) {
  return (A * x - b).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Stationary distribution of a kernel with exactly one closed class, from
/// the linear system pi (P - I) = 0 with one equation replaced by sum(pi) = 1.
inline Distribution stationary_distribution(const DiscreteKernel& k) {
  const auto classes = communicating_classes(k);
  std::size_t closed = 0;
  for (const auto& c : classes) closed += is_closed_class(k, c) ? 1 : 0;
  if (closed != 1) throw InvalidInput("stationary distribution requires exactly one closed class");

  const auto n = static_cast<Eigen::Index>(k.size());
  std::vector<Eigen::Triplet<double>> trip;
  k.for_each_entry([&](std::size_t i, std::size_t j, double p) {
    if (static_cast<Eigen::Index>(j) != n - 1) trip.emplace_back(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i), p);
  });
  for (Eigen::Index i = 0; i < n - 1; ++i) trip.emplace_back(i, i, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(n - 1, i, 1.0);
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw NumericalError("stationary system is singular");
  Eigen::VectorXd x = lu.solve(b);
  const double res = detail::max_abs_residual(A, x, b);
  if (!(res < 1e-9)) throw NumericalError("stationary solve residual too large", res);
  Distribution pi(k.size());
  for (Eigen::Index i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] = std::max(0.0, x(i));
  return pi;
}

/// ||(1/D) sum_{r=1..D} P^{nD+r}(start, .) - pi||.
inline double tv_period_averaged(const DiscreteKernel& k, std::uint64_t D, std::size_t start, std::uint64_t n,
                                 const Distribution& pi) {
  if (D < 1) throw InvalidInput("period must be at least 1");
  check_distribution(k, pi);
  Distribution v = law_after(k, start, n * D), next, avg(k.size(), 0.0);
  for (std::uint64_t r = 1; r <= D; ++r) {
    k.left_multiply(v, next);
    v.swap(next);
    for (std::size_t i = 0; i < v.size(); ++i) avg[i] += v[i] / static_cast<double>(D);
  }
  return total_variation(avg, pi);
}

inline double tv_period_averaged(const DiscreteKernel& k, std::uint64_t D, std::size_t start, std::uint64_t n) {
  return tv_period_averaged(k, D, start, n, stationary_distribution(k));
}

/// P(tau_A < infinity | X_0 = start) with tau_A = inf{n >= 1 : X_n in A}.
///
/// States that cannot reach A get probability 0; the remaining first-passage
/// system h = P h on the complement of A (h = 1 on A) is solved sparsely.
inline double hitting_probability(const DiscreteKernel& k, const std::vector<std::size_t>& A, std::size_t start) {
  if (A.empty()) throw InvalidInput("target set must be nonempty");
  const std::size_t n = k.size();
  if (start >= n) throw InvalidInput("start state out of range");
  std::vector<bool> in_a(n, false);
  for (auto a : A) {
    if (a >= n) throw InvalidInput("target state out of range");
    in_a[a] = true;
  }

  // Backward reachability to A.
  std::vector<std::vector<std::size_t>> rev(n);
  k.for_each_entry([&](std::size_t i, std::size_t j, double) { rev[j].push_back(i); });
  std::vector<bool> reaches(n, false);
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (in_a[i]) {
      reaches[i] = true;
      queue.push_back(i);
    }
  for (std::size_t h = 0; h < queue.size(); ++h)
    for (auto i : rev[queue[h]])
      if (!reaches[i]) {
        reaches[i] = true;
        queue.push_back(i);
      }

  constexpr auto kNone = static_cast<Eigen::Index>(-1);
  std::vector<Eigen::Index> unknown(n, kNone);
  Eigen::Index m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (reaches[i] && !in_a[i]) unknown[i] = m++;

  std::vector<double> h(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (in_a[i]) h[i] = 1.0;

  if (m > 0) {
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < n; ++i) {
      if (unknown[i] == kNone) continue;
      trip.emplace_back(unknown[i], unknown[i], 1.0);
      for (const auto& [j, p] : k.successors(i)) {
        if (in_a[j])
          b(unknown[i]) += p;
        else if (unknown[j] != kNone)
          trip.emplace_back(unknown[i], unknown[j], -p);
      }
    }
    Eigen::SparseMatrix<double> M(m, m);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) throw NumericalError("first-passage system is singular");
    Eigen::VectorXd x = lu.solve(b);
    const double res = detail::max_abs_residual(M, x, b);
    if (!(res < 1e-9)) throw NumericalError("first-passage solve residual too large", res);
    for (std::size_t i = 0; i < n; ++i)
      if (unknown[i] != kNone) h[i] = std::clamp(x(unknown[i]), 0.0, 1.0);
  }

  if (!in_a[start]) return h[start];
  double ret = 0.0;
  for (const auto& [j, p] : k.successors(start)) ret += p * h[j];
  return std::clamp(ret, 0.0, 1.0);
}

struct Minorization {
  double epsilon;
  Distribution nu;
};

/// Best one-step minorization on C: epsilon = sum_y min_{x in C} P(x,y),
/// nu = column minima / epsilon. Empty when epsilon = 0. The result is
/// re-verified entrywise before it is returned.
inline std::optional<Minorization> check_minorization(const DiscreteKernel& k, const std::vector<std::size_t>& C) {
  if (C.empty()) throw InvalidInput("small-set candidate must be nonempty");
  const std::size_t n = k.size();
  Distribution colmin(n, 1.0);
  for (auto x : C) {
    if (x >= n) throw InvalidInput("state out of range");
    Distribution row(n, 0.0);
    for (const auto& [j, p] : k.successors(x)) row[j] = p;
    for (std::size_t j = 0; j < n; ++j) colmin[j] = std::min(colmin[j], row[j]);
  }
  const double eps = std::accumulate(colmin.begin(), colmin.end(), 0.0);
  if (!(eps > 0.0)) return std::nullopt;
  Minorization out{eps, Distribution(n)};
  for (std::size_t j = 0; j < n; ++j) out.nu[j] = colmin[j] / eps;
  for (auto x : C)
    for (std::size_t j = 0; j < n; ++j)
      if (k.prob(x, j) < eps * out.nu[j] - 1e-15) throw NumericalError("minorization re-check failed");
  return out;
}

}  // namespace harris
