#include "binmis/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "binmis/error.hpp"

namespace binmis {

EmpiricalCell::EmpiricalCell(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::input, "empty_cell", "empirical cell needs at least one value");
  for (double v : values_)
    if (!std::isfinite(v)) throw Error(ErrorKind::input, "non_finite", "non-finite value in empirical cell");
  std::sort(values_.begin(), values_.end());
  weights_.assign(values_.size(), 1.0);
  finish();
}

EmpiricalCell::EmpiricalCell(std::vector<double> support, std::vector<double> masses) {
  if (support.size() != masses.size())
    throw Error(ErrorKind::input, "shape", "support and masses differ in length");
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
  for (std::size_t i : order) {
    if (!std::isfinite(support[i]) || !std::isfinite(masses[i]) || masses[i] < 0.0)
      throw Error(ErrorKind::input, "bad_mass", "masses must be finite and non-negative");
    if (masses[i] == 0.0) continue;
    if (!values_.empty() && values_.back() == support[i]) {
      weights_.back() += masses[i];
    } else {
      values_.push_back(support[i]);
      weights_.push_back(masses[i]);
    }
  }
  if (values_.empty()) throw Error(ErrorKind::input, "empty_cell", "empirical cell has no positive mass");
  finish();
}

void EmpiricalCell::finish() {
  cum_w_.assign(values_.size() + 1, 0.0);
  cum_wy_.assign(values_.size() + 1, 0.0);
  CompensatedSum w, wy;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    w.add(weights_[i]);
    wy.add(weights_[i] * values_[i]);
    cum_w_[i + 1] = w.value();
    cum_wy_[i + 1] = wy.value();
  }
}

double EmpiricalCell::mean() const { return cum_wy_.back() / cum_w_.back(); }

double EmpiricalCell::raw_moment(int j) const {
  CompensatedSum acc;
  for (std::size_t i = 0; i < values_.size(); ++i) acc.add(weights_[i] * std::pow(values_[i], j));
  return acc.value() / total_weight();
}

double EmpiricalCell::variance() const {
  const double m = mean();
  CompensatedSum acc;
  for (std::size_t i = 0; i < values_.size(); ++i) acc.add(weights_[i] * (values_[i] - m) * (values_[i] - m));
  return acc.value() / total_weight();
}

double empirical_quantile(const EmpiricalCell& cell, double u) {
  if (u <= 0.0) return cell.min();
  const double total = cell.total_weight();
  // Slack absorbs rounding in u * total (e.g. 0.3 * 10 = 3.0000000000000004).
  const double target = u * total - 1e-12 * total;
  std::size_t lo = 1, hi = cell.count();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (cell.cum_weight(mid) >= target)
      hi = mid;
    else
      lo = mid + 1;
  }
  return cell.values()[lo - 1];
}

TruncatedMeans truncated_means(const EmpiricalCell& cell, double q_low, double q_high) {
  const auto v = cell.values();
  TruncatedMeans out;
  const std::size_t n_low = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), q_low) - v.begin());
  out.lower = n_low == 0 ? cell.min() : cell.cum_weighted_sum(n_low) / cell.cum_weight(n_low);
  const std::size_t first_high =
      static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), q_high) - v.begin());
  if (first_high == cell.count()) {
    out.upper = cell.max();
  } else {
    const double w = cell.total_weight() - cell.cum_weight(first_high);
    out.upper = (cell.cum_weighted_sum(cell.count()) - cell.cum_weighted_sum(first_high)) / w;
  }
  return out;
}

TruncatedMeans mass_truncated_means(const EmpiricalCell& cell, double r) {
  if (r <= 0.0) return {cell.min(), cell.max()};
  if (r >= 1.0) return {cell.mean(), cell.mean()};
  const auto v = cell.values();
  const std::size_t n = cell.count();
  const double total = cell.total_weight();
  const double mass = r * total;

  // Lower: first atom i whose cumulative weight reaches the target mass.
  std::size_t i = 0;
  {
    std::size_t lo = 0, hi = n - 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (cell.cum_weight(mid + 1) >= mass)
        hi = mid;
      else
        lo = mid + 1;
    }
    i = lo;
  }
  const double lower = (cell.cum_weighted_sum(i) + (mass - cell.cum_weight(i)) * v[i]) / mass;

  // Upper: last atom j such that the mass at or above it reaches the target.
  std::size_t lo = 0, hi = n - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (total - cell.cum_weight(mid) >= mass)
      lo = mid;
    else
      hi = mid - 1;
  }
  const std::size_t j = lo;
  const double above = total - cell.cum_weight(j + 1);
  const double sum_above = cell.cum_weighted_sum(n) - cell.cum_weighted_sum(j + 1);
  const double upper = (sum_above + (mass - above) * v[j]) / mass;
  return {lower, upper};
}

MomentSet assemble_moments(double q, std::array<double, 2> p, const ConditionalRaw& raw, double n,
                           MomentSource source) {
  MomentSet m;
  m.q = q;
  m.p = p;
  m.n = n;
  m.source = source;
  const double var_z = q * (1.0 - q);
  // E[y^j | z=k] and E[T y^j | z=k]
  std::array<std::array<double, 3>, 2> ey{}, ety{};
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 3; ++j) {
      ety[k][j] = p[k] * raw[1][k][j];
      ey[k][j] = ety[k][j] + (1.0 - p[k]) * raw[0][k][j];
    }
    m.mu[0][k] = raw[0][k][0];
    m.mu[1][k] = raw[1][k][0];
    m.ybar[k] = ey[k][0];
  }
  // Cov(X, z) = q (1-q) (E[X|z=1] - E[X|z=0]) for binary z.
  m.pi = var_z * (p[1] - p[0]);
  for (int j = 0; j < 3; ++j) m.eta[j] = var_z * (ey[1][j] - ey[0][j]);
  for (int j = 0; j < 2; ++j) m.tau[j] = var_z * (ety[1][j] - ety[0][j]);
  m.y_rms = std::sqrt(q * ey[1][1] + (1.0 - q) * ey[0][1]);
  return m;
}

namespace {

void require_cell_shape(const ByTreatmentInstrument<std::size_t>& n, int cell) {
  const std::string where = " in cell " + std::to_string(cell);
  if (n[0][0] + n[1][0] == 0 || n[0][1] + n[1][1] == 0)
    throw Error(ErrorKind::identification, "instrument_degenerate", "instrument degenerate" + where);
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < 2; ++k)
      if (n[t][k] == 0)
        throw Error(ErrorKind::identification, "empty_subcell",
                    "empty sub-cell (T=" + std::to_string(t) + ", z=" + std::to_string(k) + ")" + where);
}

}  // namespace

MomentSet empirical_moments(const Sample& sample, int cell) {
  ByTreatmentInstrument<std::size_t> n{};
  ByTreatmentInstrument<std::array<CompensatedSum, 3>> sums{};
  for (const auto& o : sample.rows()) {
    if (o.cell != cell) continue;
    ++n[o.t][o.z];
    const double y2 = o.y * o.y;
    auto& s = sums[o.t][o.z];
    s[0].add(o.y);
    s[1].add(y2);
    s[2].add(y2 * o.y);
  }
  require_cell_shape(n, cell);
  ConditionalRaw raw{};
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 3; ++j) raw[t][k][j] = sums[t][k][j].value() / static_cast<double>(n[t][k]);
  const double nz0 = static_cast<double>(n[0][0] + n[1][0]);
  const double nz1 = static_cast<double>(n[0][1] + n[1][1]);
  const double total = nz0 + nz1;
  const std::array<double, 2> p{static_cast<double>(n[1][0]) / nz0, static_cast<double>(n[1][1]) / nz1};
  return assemble_moments(nz1 / total, p, raw, total, MomentSource::empirical);
}

MomentSet population_moments(const DGPSpec& spec) {
  if (!(spec.q > 0.0 && spec.q < 1.0))
    throw Error(ErrorKind::input, "invalid_spec", "q must lie in (0,1)");
  for (int s = 0; s < 2; ++s) {
    for (int k = 0; k < 2; ++k) {
      const auto& d = spec.dist[s][k];
      if (std::abs(d.raw_moment(0) - 1.0) > 1e-12 ||
          std::any_of(d.probs.begin(), d.probs.end(), [](double x) { return x < 0.0; }))
        throw Error(ErrorKind::input, "invalid_spec", "error distribution is not a probability law");
    }
  }
  const double c = spec.structural.c();
  const double beta = spec.structural.beta();
  ConditionalRaw raw{};
  std::array<double, 2> p{};
  for (int k = 0; k < 2; ++k) {
    for (int t = 0; t < 2; ++t) {
      double prob_t = 0.0;
      std::array<double, 3> acc{};
      for (int s = 0; s < 2; ++s) {
        const double w = (s == 1 ? spec.p_star[k] : 1.0 - spec.p_star[k]) * spec.flip_prob(s, t);
        prob_t += w;
        const double a = c + beta * s;
        const double e1 = spec.error_moment(s, k, 1);
        const double e2 = spec.error_moment(s, k, 2);
        const double e3 = spec.error_moment(s, k, 3);
        // E[(a + e)^j] by binomial expansion.
        acc[0] += w * (a + e1);
        acc[1] += w * (a * a + 2.0 * a * e1 + e2);
        acc[2] += w * (a * a * a + 3.0 * a * a * e1 + 3.0 * a * e2 + e3);
      }
      if (prob_t <= 0.0)
        throw Error(ErrorKind::input, "invalid_spec",
                    "P(T=" + std::to_string(t) + "|z=" + std::to_string(k) + ") is zero");
      for (int j = 0; j < 3; ++j) raw[t][k][j] = acc[j] / prob_t;
      if (t == 1) p[k] = prob_t;
    }
  }
  return assemble_moments(spec.q, p, raw, 0.0, MomentSource::population);
}

CellData cell_data(const Sample& sample, int cell) {
  CellData data;
  data.cell = cell;
  data.moments = empirical_moments(sample, cell);
  ByTreatmentInstrument<std::vector<double>> ys;
  for (const auto& o : sample.rows())
    if (o.cell == cell) ys[o.t][o.z].push_back(o.y);
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < 2; ++k) data.sub[t][k] = EmpiricalCell(std::move(ys[t][k]));
  return data;
}

}  // namespace binmis
