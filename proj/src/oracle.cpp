#include "binmis/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "binmis/error.hpp"

namespace binmis {

namespace {

struct Tableau {
  Eigen::MatrixXd T;  // rows 0..M-1 constraints, row M objective; last column rhs
  std::vector<int> basis;
  int rows = 0;
  int cols = 0;  // structural columns (excluding rhs)

  double& rhs(int i) { return T(i, cols); }

  void pivot(int r, int c) {
    T.row(r) /= T(r, c);
    for (int i = 0; i <= rows; ++i) {
      if (i == r) continue;
      const double f = T(i, c);
      if (f != 0.0) T.row(i) -= f * T.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
  }

  // Minimizes the objective row; columns >= allowed are never entered.
  void optimize(int allowed, double tol) {
    for (int iter = 0;; ++iter) {
      if (iter > 100000) throw Error(ErrorKind::invariant, "simplex_cycle", "simplex iteration limit reached");
      int enter = -1;
      for (int j = 0; j < allowed; ++j) {
        if (T(rows, j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows; ++i) {
        if (T(i, enter) <= tol) continue;
        const double ratio = T(i, cols) / T(i, enter);
        if (ratio < best - tol ||
            (ratio <= best + tol && leave >= 0 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) throw Error(ErrorKind::invariant, "lp_unbounded", "linear program is unbounded");
      pivot(leave, enter);
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double tol) {
  const int m = static_cast<int>(lp.A.rows());
  const int n = static_cast<int>(lp.A.cols());
  if (lp.b.size() != m || lp.c.size() != n || lp.upper.size() != n)
    throw Error(ErrorKind::input, "lp_shape", "inconsistent linear program dimensions");
  std::vector<int> bounded;
  for (int j = 0; j < n; ++j)
    if (std::isfinite(lp.upper(j))) bounded.push_back(j);
  const int nb = static_cast<int>(bounded.size());

  // Columns: x (n), bound slacks (nb), artificials (m).
  Tableau tab;
  tab.rows = m + nb;
  tab.cols = n + nb + m;
  tab.T = Eigen::MatrixXd::Zero(tab.rows + 1, tab.cols + 1);
  tab.basis.assign(static_cast<std::size_t>(tab.rows), 0);
  for (int i = 0; i < m; ++i) {
    const double sign = lp.b(i) < 0.0 ? -1.0 : 1.0;
    tab.T.row(i).head(n) = sign * lp.A.row(i);
    tab.T(i, n + nb + i) = 1.0;
    tab.rhs(i) = sign * lp.b(i);
    tab.basis[static_cast<std::size_t>(i)] = n + nb + i;
  }
  for (int s = 0; s < nb; ++s) {
    const int row = m + s;
    tab.T(row, bounded[static_cast<std::size_t>(s)]) = 1.0;
    tab.T(row, n + s) = 1.0;
    tab.rhs(row) = lp.upper(bounded[static_cast<std::size_t>(s)]);
    tab.basis[static_cast<std::size_t>(row)] = n + s;
  }
  // Phase one: minimize the sum of artificials.
  for (int i = 0; i < m; ++i) tab.T.row(tab.rows) -= tab.T.row(i);
  for (int i = 0; i < m; ++i) tab.T(tab.rows, n + nb + i) = 0.0;
  tab.optimize(n + nb, tol);

  LpSolution sol;
  sol.infeasibility = -tab.T(tab.rows, tab.cols);
  const double scale = std::max(1.0, lp.b.cwiseAbs().maxCoeff());
  if (sol.infeasibility > tol * scale) return sol;
  sol.feasible = true;

  // Drive zero-level artificials out of the basis where possible.
  for (int i = 0; i < tab.rows; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n + nb) continue;
    for (int j = 0; j < n + nb; ++j) {
      if (std::abs(tab.T(i, j)) > tol) {
        tab.pivot(i, j);
        break;
      }
    }
  }
  // Phase two.
  tab.T.row(tab.rows).setZero();
  tab.T.row(tab.rows).head(n) = lp.c;
  for (int i = 0; i < tab.rows; ++i) {
    const int b = tab.basis[static_cast<std::size_t>(i)];
    const double cb = b < n ? lp.c(b) : 0.0;
    if (cb != 0.0) tab.T.row(tab.rows) -= cb * tab.T.row(i);
  }
  tab.optimize(n + nb, tol);
  sol.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < tab.rows; ++i) {
    const int b = tab.basis[static_cast<std::size_t>(i)];
    if (b < n) sol.x(b) = tab.T(i, tab.cols);
  }
  sol.objective = lp.c.dot(sol.x);
  return sol;
}

void DiscreteInstance::validate() const {
  if (support.empty() || support.size() > kMaxOracleSupport)
    throw Error(ErrorKind::input, "oracle_support", "oracle support must have 1 to 32 points");
  for (std::size_t i = 1; i < support.size(); ++i)
    if (!(support[i - 1] < support[i]))
      throw Error(ErrorKind::input, "oracle_support", "oracle support must be sorted and distinct");
  for (const auto& row : mass) {
    for (const auto& f : row) {
      if (f.size() != support.size())
        throw Error(ErrorKind::input, "oracle_mass", "mass vector length differs from support");
      double total = 0.0;
      for (double x : f) {
        if (!(x >= 0.0)) throw Error(ErrorKind::input, "oracle_mass", "negative mass");
        total += x;
      }
      if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorKind::input, "oracle_mass", "masses must sum to 1");
    }
  }
}

DiscreteInstance discretize(const DGPSpec& spec) {
  if (spec.mode != Mode::discrete)
    throw Error(ErrorKind::input, "oracle_mode", "oracle instances require a discrete-mode spec");
  const double c = spec.structural.c();
  const double beta = spec.structural.beta();
  ByTreatmentInstrument<std::map<double, double>> joint;
  std::map<double, int> values;
  for (int k = 0; k < 2; ++k) {
    for (int s = 0; s < 2; ++s) {
      const double ps = s == 1 ? spec.p_star[k] : 1.0 - spec.p_star[k];
      const auto& d = spec.dist[s][k];
      for (std::size_t i = 0; i < 3; ++i) {
        if (d.probs[i] <= 0.0) continue;
        const double y = c + beta * s + d.points[i];
        values[y] = 0;
        for (int t = 0; t < 2; ++t) joint[t][k][y] += ps * spec.flip_prob(s, t) * d.probs[i];
      }
    }
  }
  DiscreteInstance inst;
  for (const auto& [y, unused] : values) inst.support.push_back(y);
  inst.q = spec.q;
  for (int k = 0; k < 2; ++k) {
    inst.p[k] = spec.p_observed(k);
    for (int t = 0; t < 2; ++t) {
      const double pt = t == 1 ? inst.p[k] : 1.0 - inst.p[k];
      auto& f = inst.mass[t][k];
      f.assign(inst.support.size(), 0.0);
      for (std::size_t i = 0; i < inst.support.size(); ++i) {
        const auto it = joint[t][k].find(inst.support[i]);
        if (it != joint[t][k].end()) f[i] = it->second / pt;
      }
      double total = 0.0;
      for (double x : f) total += x;
      for (double& x : f) x /= total;
    }
  }
  inst.alpha0 = spec.structural.alpha0();
  inst.alpha1 = spec.structural.alpha1();
  inst.validate();
  return inst;
}

CellData cell_data(const DiscreteInstance& instance) {
  instance.validate();
  CellData data;
  ConditionalRaw raw{};
  for (int t = 0; t < 2; ++t) {
    for (int k = 0; k < 2; ++k) {
      data.sub[t][k] = EmpiricalCell(instance.support, instance.mass[t][k]);
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < instance.support.size(); ++i)
          acc += instance.mass[t][k][i] * std::pow(instance.support[i], j + 1);
        raw[t][k][j] = acc;
      }
    }
  }
  data.moments = assemble_moments(instance.q, instance.p, raw, 0.0, MomentSource::population);
  return data;
}

namespace {

// Sub-mass g of F with sum r and, when given, prescribed weighted sums of y.
bool submass_feasible(const std::vector<double>& y, const std::vector<double>& F, double r,
                      const std::vector<double>& y_sums) {
  const int n = static_cast<int>(y.size());
  LinearProgram lp;
  lp.A = Eigen::MatrixXd::Zero(1 + static_cast<int>(y_sums.size()), n);
  lp.b = Eigen::VectorXd::Zero(lp.A.rows());
  lp.A.row(0).setOnes();
  lp.b(0) = r;
  for (std::size_t row = 0; row < y_sums.size(); ++row) {
    for (int i = 0; i < n; ++i) lp.A(static_cast<int>(row) + 1, i) = y[static_cast<std::size_t>(i)];
    lp.b(static_cast<int>(row) + 1) = y_sums[row];
  }
  lp.c = Eigen::VectorXd::Zero(n);
  lp.upper = Eigen::Map<const Eigen::VectorXd>(F.data(), n);
  return solve_lp(lp, 1e-10).feasible;
}

}  // namespace

bool lp_feasible_mixture(const DiscreteInstance& inst) {
  const double a0 = inst.alpha0;
  const double a1 = inst.alpha1;
  const double p_lo = std::min(inst.p[0], inst.p[1]);
  const double p_hi = std::max(inst.p[0], inst.p[1]);
  if (a0 < 0.0 || a1 < 0.0 || a0 > p_lo || a1 > 1.0 - p_hi || !(a0 + a1 < 1.0)) return false;

  for (int k = 0; k < 2; ++k) {
    const double p = inst.p[k];
    const double ps = (p - a0) / (1.0 - a0 - a1);
    const std::array<double, 2> r{a1 * ps / (1.0 - p), (1.0 - a1) * ps / p};
    std::array<double, 2> mean{};
    std::array<double, 2> y_total{};
    for (int t = 0; t < 2; ++t) {
      for (std::size_t i = 0; i < inst.support.size(); ++i) mean[t] += inst.support[i] * inst.mass[t][k][i];
      y_total[t] = mean[t];
    }
    // Rows: observed mean of sub-cell t as the r_t mixture of the latent means.
    Eigen::Matrix2d M;
    M << r[1], 1.0 - r[1], r[0], 1.0 - r[0];
    const Eigen::Vector2d obs(mean[1], mean[0]);
    const double scale = std::max({1.0, std::abs(mean[0]), std::abs(mean[1])});
    if (std::abs(M.determinant()) < 1e-14) {
      if (std::abs(mean[1] - mean[0]) > 1e-12 * scale) return false;
      continue;
    }
    const Eigen::Vector2d latent = M.partialPivLu().solve(obs);  // (mu1, mu0)
    for (int t = 0; t < 2; ++t) {
      if (r[t] <= 1e-15 || r[t] >= 1.0 - 1e-15) continue;
      const std::vector<double> sums{r[t] * latent(0), y_total[t] - (1.0 - r[t]) * latent(1)};
      if (!submass_feasible(inst.support, inst.mass[t][k], r[t], sums)) return false;
    }
  }
  return true;
}

double lp_extreme_mean(const std::vector<double>& support, const std::vector<double>& mass, double r, bool maximize) {
  if (!(r > 0.0 && r <= 1.0)) throw Error(ErrorKind::input, "oracle_mass", "sub-mass must lie in (0,1]");
  const int n = static_cast<int>(support.size());
  LinearProgram lp;
  lp.A = Eigen::MatrixXd::Ones(1, n);
  lp.b = Eigen::VectorXd::Constant(1, r);
  lp.c = Eigen::Map<const Eigen::VectorXd>(support.data(), n);
  if (maximize) lp.c = -lp.c;
  lp.upper = Eigen::Map<const Eigen::VectorXd>(mass.data(), n);
  const auto sol = solve_lp(lp, 1e-12);
  if (!sol.feasible) throw Error(ErrorKind::invariant, "lp_infeasible", "sub-mass exceeds total mass");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += support[static_cast<std::size_t>(i)] * sol.x(i);
  return acc / r;
}

std::vector<GridPoint> bruteforce_sharp_set(const DiscreteInstance& instance, const AlphaGrid& grid) {
  instance.validate();
  const AlphaRectangle rect{std::min(instance.p[0], instance.p[1]), 1.0 - std::max(instance.p[0], instance.p[1])};
  std::vector<GridPoint> out;
  DiscreteInstance probe = instance;
  for (double a0 : grid.alpha0) {
    for (double a1 : grid.alpha1) {
      if (!rect.contains(a0, a1)) continue;
      probe.alpha0 = a0;
      probe.alpha1 = a1;
      out.push_back({a0, a1, lp_feasible_mixture(probe)});
    }
  }
  return out;
}

std::vector<bool> near_boundary(const AlphaGrid& grid, const std::vector<GridPoint>& points) {
  const int n0 = static_cast<int>(grid.alpha0.size());
  const int n1 = static_cast<int>(grid.alpha1.size());
  std::vector<int> index(static_cast<std::size_t>(n0 * n1), -1);
  std::vector<std::pair<int, int>> position;
  std::size_t next = 0;
  for (int i = 0; i < n0 && next < points.size(); ++i) {
    for (int j = 0; j < n1 && next < points.size(); ++j) {
      const auto& g = points[next];
      if (g.alpha0 != grid.alpha0[static_cast<std::size_t>(i)] || g.alpha1 != grid.alpha1[static_cast<std::size_t>(j)])
        continue;
      index[static_cast<std::size_t>(i * n1 + j)] = static_cast<int>(next);
      position.emplace_back(i, j);
      ++next;
    }
  }
  if (next != points.size())
    throw Error(ErrorKind::invariant, "grid_layout", "points are not in grid order");
  std::vector<bool> out(points.size(), false);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto [i, j] = position[p];
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        const int a = i + di, b = j + dj;
        if (a < 0 || b < 0 || a >= n0 || b >= n1) continue;
        const int q = index[static_cast<std::size_t>(a * n1 + b)];
        if (q >= 0 && points[static_cast<std::size_t>(q)].feasible != points[p].feasible) out[p] = true;
      }
    }
  }
  return out;
}

MahajanReport mahajan_incompatibility_check(double p_star_0, double p_star_1, double m) {
  MahajanReport rep;
  rep.system << 1.0 - p_star_0, p_star_0, 1.0 - p_star_1, p_star_1;
  rep.determinant = rep.system.determinant();
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(rep.system);
  rep.rank = static_cast<int>(lu.rank());
  rep.kernel = rep.rank < 2 ? Eigen::MatrixXd(lu.kernel()) : Eigen::MatrixXd::Zero(2, 0);
  rep.candidate = Eigen::Vector2d(-p_star_0, 1.0 - p_star_0) * m;
  // The k=1 equation at the candidate collapses to m (p*_1 - p*_0); evaluated in
  // that form it is exactly zero iff m = 0 or p*_0 = p*_1.
  rep.residual = m * (p_star_1 - p_star_0);
  rep.unique_zero = rep.rank == 2;
  rep.consistent = rep.residual == 0.0;
  if (m == 0.0)
    rep.branch = "exogenous";
  else if (rep.rank < 2)
    rep.branch = "no_first_stage";
  else
    rep.branch = "inconsistent";
  return rep;
}

}  // namespace binmis
