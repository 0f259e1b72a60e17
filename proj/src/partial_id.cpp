#include "binmis/partial_id.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binmis/error.hpp"

namespace binmis {

bool AlphaRectangle::contains(double alpha0, double alpha1) const noexcept {
  return alpha0 >= 0.0 && alpha1 >= 0.0 && alpha0 <= alpha0_max && alpha1 <= alpha1_max && alpha0 + alpha1 < 1.0;
}

AlphaRectangle alpha_rectangle(const MomentSet& moments) {
  const auto [lo, hi] = std::minmax(moments.p[0], moments.p[1]);
  return {lo, 1.0 - hi};
}

Interval beta_interval_first_order(const MomentSet& moments) {
  if (moments.pi == 0.0)
    throw Error(ErrorKind::identification, "no_first_stage", "no first stage: Cov(T,z) = 0");
  const double rf = moments.eta[0] / (moments.q * (1.0 - moments.q));
  const double iv = moments.eta[0] / moments.pi;
  const auto [lo, hi] = std::minmax(rf, iv);
  return {lo, hi};
}

double latent_first_stage(double alpha0, double alpha1, double p_k) {
  return (p_k - alpha0) / (1.0 - alpha0 - alpha1);
}

MixingWeights mixing_weights(double /*alpha0*/, double alpha1, double p_star_k, double p_k) {
  if (!(p_k > 0.0 && p_k < 1.0))
    throw Error(ErrorKind::identification, "degenerate_arm", "degenerate observed treatment arm: p_k = " +
                                                                 std::to_string(p_k));
  return {alpha1 * p_star_k / (1.0 - p_k), (1.0 - alpha1) * p_star_k / p_k};
}

LatentMeans solve_conditional_means(double alpha0, double alpha1, const MomentSet& moments, int k) {
  const double p = moments.p[k];
  const double mu0k = moments.mu[0][k];
  const double mu1k = moments.mu[1][k];
  const double ybar = moments.ybar[k];
  const double det1 = p - alpha0;
  const double det0 = 1.0 - p - alpha1;
  constexpr double eps = 1e-14;
  if (std::abs(det1) <= eps || std::abs(det0) <= eps) {
    const double scale = std::max({1.0, std::abs(mu0k), std::abs(mu1k)});
    if (std::abs(mu0k - mu1k) > 1e-12 * scale)
      throw Error(ErrorKind::identification, "infeasible", "infeasible: inconsistent system");
    LatentMeans out{ybar, ybar};
    if (std::abs(det0) > eps) out.mu0 = ((1.0 - p) * mu0k - alpha1 * ybar) / det0;
    if (std::abs(det1) > eps) out.mu1 = (p * mu1k - alpha0 * ybar) / det1;
    return out;
  }
  return {((1.0 - p) * mu0k - alpha1 * ybar) / det0, (p * mu1k - alpha0 * ybar) / det1};
}

bool feasible_at(double alpha0, double alpha1, const CellData& data, int k) {
  const auto& m = data.moments;
  const double p = m.p[k];
  if (!(alpha0 < p && p < 1.0 - alpha1)) return false;
  LatentMeans latent;
  try {
    latent = solve_conditional_means(alpha0, alpha1, m, k);
  } catch (const Error&) {
    return false;
  }
  const double p_star = latent_first_stage(alpha0, alpha1, p);
  const auto w = mixing_weights(alpha0, alpha1, p_star, p);
  for (int t = 0; t < 2; ++t) {
    const double r = t == 1 ? w.r1 : w.r0;
    if (r <= 0.0 || r >= 1.0) continue;
    const auto& cell = data.sub[t][k];
    const double slack = 1e-10 * std::max({1.0, std::abs(cell.min()), std::abs(cell.max())});
    const auto tm = mass_truncated_means(cell, r);
    if (latent.mu1 < tm.lower - slack || latent.mu1 > tm.upper + slack) return false;
  }
  return true;
}

namespace {

std::vector<double> axis_by_step(double max, double h) {
  std::vector<double> out;
  const double limit = max + 1e-12;
  for (long i = 0;; ++i) {
    const double x = static_cast<double>(i) * h;
    if (x > limit) break;
    out.push_back(std::min(x, max));
  }
  return out;
}

std::vector<double> axis_by_count(double max, int n) {
  if (n < 1) throw Error(ErrorKind::input, "bad_grid", "grid needs at least one point per axis");
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 1; i < n; ++i) out[static_cast<std::size_t>(i)] = max * static_cast<double>(i) / (n - 1);
  if (n > 1) out.back() = max;
  return out;
}

}  // namespace

AlphaGrid AlphaGrid::by_step(const AlphaRectangle& rect, double h) {
  if (!(h > 0.0 && h <= 0.1)) throw Error(ErrorKind::input, "bad_grid", "grid step must lie in (0, 0.1]");
  return {axis_by_step(rect.alpha0_max, h), axis_by_step(rect.alpha1_max, h)};
}

AlphaGrid AlphaGrid::by_count(const AlphaRectangle& rect, int n0, int n1) {
  return {axis_by_count(rect.alpha0_max, n0), axis_by_count(rect.alpha1_max, n1)};
}

std::string_view to_string(CaseLabel label) {
  switch (label) {
    case CaseLabel::both_k:
      return "both_k";
    case CaseLabel::one_k:
      return "one_k";
    case CaseLabel::none:
      return "none";
  }
  return "none";
}

std::size_t SharpSet::feasible_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const GridPoint& g) { return g.feasible; }));
}

const GridPoint& SharpSet::nearest(double alpha0, double alpha1) const {
  if (points.empty()) throw Error(ErrorKind::invariant, "empty_grid", "sharp set has no grid points");
  const GridPoint* best = &points.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& g : points) {
    const double d = std::hypot(g.alpha0 - alpha0, g.alpha1 - alpha1);
    if (d < best_d) {
      best_d = d;
      best = &g;
    }
  }
  return *best;
}

std::array<double, 2> default_mean_tolerance(const CellData& data) {
  if (data.moments.source == MomentSource::population) return {0.0, 0.0};
  std::array<double, 2> tol{};
  for (int k = 0; k < 2; ++k) {
    const auto& c0 = data.sub[0][k];
    const auto& c1 = data.sub[1][k];
    tol[k] = 2.0 * std::sqrt(c0.variance() / c0.total_weight() + c1.variance() / c1.total_weight());
  }
  return tol;
}

SharpSet sharp_set_grid(const CellData& data, const AlphaGrid& grid, std::optional<std::array<double, 2>> mean_tol) {
  const auto& m = data.moments;
  if (m.pi == 0.0 || m.p[0] == m.p[1])
    throw Error(ErrorKind::identification, "no_first_stage", "no first stage in cell " + std::to_string(data.cell));
  SharpSet set;
  set.rect = alpha_rectangle(m);
  set.mean_tol = mean_tol.value_or(default_mean_tolerance(data));
  for (int k = 0; k < 2; ++k) {
    if (!(set.mean_tol[k] >= 0.0))
      throw Error(ErrorKind::input, "bad_tolerance", "mean-equality tolerance must be >= 0");
    set.restricts[k] = std::abs(m.mu[0][k] - m.mu[1][k]) > set.mean_tol[k];
  }
  const int n_restrict = int(set.restricts[0]) + int(set.restricts[1]);
  set.label = n_restrict == 2 ? CaseLabel::both_k : n_restrict == 1 ? CaseLabel::one_k : CaseLabel::none;
  if (grid.alpha0.size() > 1) set.grid_step = grid.alpha0[1] - grid.alpha0[0];

  const double theta1 = m.eta[0] / m.pi;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double a0 : grid.alpha0) {
    for (double a1 : grid.alpha1) {
      if (!set.rect.contains(a0, a1)) continue;
      bool ok = true;
      for (int k = 0; k < 2 && ok; ++k)
        if (set.restricts[k]) ok = feasible_at(a0, a1, data, k);
      set.points.push_back({a0, a1, ok});
      if (ok) {
        const double b = theta1 * (1.0 - a0 - a1);
        lo = std::min(lo, b);
        hi = std::max(hi, b);
      }
    }
  }
  if (!(lo <= hi)) throw Error(ErrorKind::invariant, "empty_mask", "sharp set mask is empty");
  set.beta = {lo, hi};
  return set;
}

SharpSet sharp_set_grid(const Sample& sample, int cell, double h, std::optional<double> mean_tol) {
  const auto data = cell_data(sample, cell);
  const auto grid = AlphaGrid::by_step(alpha_rectangle(data.moments), h);
  std::optional<std::array<double, 2>> tol;
  if (mean_tol) tol = std::array<double, 2>{*mean_tol, *mean_tol};
  return sharp_set_grid(data, grid, tol);
}

}  // namespace binmis
