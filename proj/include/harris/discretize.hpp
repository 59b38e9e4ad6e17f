#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "harris/core.hpp"
#include "harris/discrete_kernel.hpp"
#include "harris/mwg.hpp"
#include "harris/trace.hpp"

namespace harris {

/// Regular grid over a box. Only coordinates the sampler may move are
/// gridded; the others stay at the anchor's values.
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  double step = 0.1;
  double min_probability = 1e-12;
};

struct DiscretizedChain {
  DiscreteKernel kernel;
  std::vector<Point> centers;
};

/// Finite-state surrogate of a random-scan Metropolis-within-Gibbs chain.
///
/// States are the grid-cell centres that lie in the support. From centre x,
/// direction i (chosen with probability 1/|active|) moves to centre y on the
/// same axis with weight q_i(x, y_i) * step * alpha_i(x, y). All off-diagonal
/// weights share one normalising factor, so detailed balance with respect to
/// f at the centres is kept; entries below `min_probability` are treated as
/// impossible; rejected mass stays on the diagonal.
inline DiscretizedChain discretize_coordinate_chain(const TargetDensity& target, const CoordinateSampler& sampler,
                                                    const Point& anchor, const GridSpec& grid) {
  const std::size_t d = target.dim();
  if (sampler.dim() != d || anchor.dim() != d) throw InvalidInput("sampler, anchor and target dimensions differ");
  if (grid.lower.size() != d || grid.upper.size() != d) throw InvalidInput("grid box needs bounds for every coordinate");
  if (!(grid.step > 0.0)) throw InvalidInput("grid step must be positive");

  const auto& active = sampler.active();
  std::vector<std::size_t> cells(active.size());
  std::size_t total = 1;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const std::size_t j = active[a];
    const double width = grid.upper[j] - grid.lower[j];
    if (!(width > 0.0)) throw InvalidInput("grid box must have positive width");
    cells[a] = static_cast<std::size_t>(std::llround(width / grid.step));
    if (cells[a] == 0) throw InvalidInput("grid step larger than the box");
    total *= cells[a];
  }
  if (total > 4'000'000) throw InvalidInput("grid too fine: more than 4e6 cells");

  auto centre_of = [&](std::vector<std::size_t> const& idx) {
    std::vector<double> c(anchor.vec());
    for (std::size_t a = 0; a < active.size(); ++a)
      c[active[a]] = grid.lower[active[a]] + (static_cast<double>(idx[a]) + 0.5) * grid.step;
    return Point(std::move(c));
  };

  constexpr std::size_t kOff = static_cast<std::size_t>(-1);
  std::vector<std::size_t> state_of(total, kOff);
  std::vector<Point> centres;
  std::vector<std::vector<std::size_t>> multi;
  std::vector<double> log_f;
  std::vector<std::size_t> idx(active.size(), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t a = active.size(); a-- > 0;) {
      idx[a] = rem % cells[a];
      rem /= cells[a];
    }
    Point c = centre_of(idx);
    const double lf = target.log_density(c);
    if (lf == kNegInf) continue;
    state_of[flat] = centres.size();
    centres.push_back(std::move(c));
    multi.push_back(idx);
    log_f.push_back(lf);
  }
  if (centres.empty()) throw InvalidInput("no grid cell centre lies in the support");

  std::vector<std::size_t> stride(active.size(), 1);
  for (std::size_t a = active.size(); a-- > 1;) stride[a - 1] = stride[a] * cells[a];

  const double dir_weight = 1.0 / static_cast<double>(active.size());
  std::vector<Transition> off;
  std::vector<double> row_sum(centres.size(), 0.0);
  for (std::size_t s = 0; s < centres.size(); ++s) {
    const Point& x = centres[s];
    std::size_t flat = 0;
    for (std::size_t a = 0; a < active.size(); ++a) flat += multi[s][a] * stride[a];
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t i = active[a];
      const CoordinateProposal& cp = sampler.proposal(i);
      const std::size_t base = flat - multi[s][a] * stride[a];
      for (std::size_t k = 0; k < cells[a]; ++k) {
        if (k == multi[s][a]) continue;
        const std::size_t t = state_of[base + k * stride[a]];
        if (t == kOff) continue;
        const double z = centres[t][i];
        const double lq = cp.log_q(x, z);
        if (lq == kNegInf) continue;
        const double la = coord_acceptance_log(target, cp, x, z);
        const double w = dir_weight * std::exp(lq + la) * grid.step;
        if (w > 0.0) {
          off.push_back({s, t, w});
          row_sum[s] += w;
        }
      }
    }
  }
  double max_row = 0.0;
  for (double r : row_sum) max_row = std::max(max_row, r);
  const double scale = max_row > 1.0 ? 1.0 / max_row : 1.0;

  std::vector<Transition> all;
  std::vector<double> kept(centres.size(), 0.0);
  for (const auto& t : off) {
    const double p = t.prob * scale;
    if (p < grid.min_probability) continue;
    all.push_back({t.from, t.to, p});
    kept[t.from] += p;
  }
  for (std::size_t s = 0; s < centres.size(); ++s) {
    const double stay = 1.0 - kept[s];
    if (stay > 0.0) all.push_back({s, s, stay});
  }
  std::vector<std::string> labels;
  labels.reserve(centres.size());
  for (const auto& c : centres) labels.push_back(format_coords(c));
  return {DiscreteKernel(centres.size(), std::move(all), std::move(labels)), std::move(centres)};
}

/// Target law restricted to the grid centres, normalised.
inline Distribution grid_target_law(const TargetDensity& target, const std::vector<Point>& centres) {
  std::vector<double> lf;
  double m = kNegInf;
  for (const auto& c : centres) {
    lf.push_back(target.log_density(c));
    m = std::max(m, lf.back());
  }
  Distribution pi(centres.size());
  double z = 0.0;
  for (std::size_t i = 0; i < centres.size(); ++i) z += (pi[i] = std::exp(lf[i] - m));
  for (double& p : pi) p /= z;
  return pi;
}

}  // namespace harris
