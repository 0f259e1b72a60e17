#include "binmis/gmm.hpp"

#include <cmath>
#include <cstdio>

#include "binmis/error.hpp"
#include "binmis/moments.hpp"

namespace binmis {

namespace {

Eigen::Vector3d structural_vector(const ThetaVector& th) {
  const auto s = structural_map(th);
  return {s.beta, s.alpha0, s.alpha1};
}

double step_for(double x, double rel) { return x != 0.0 ? rel * std::abs(x) : rel; }

}  // namespace

Eigen::Matrix3d structural_jacobian_fd(const ThetaVector& theta, double rel_step) {
  Eigen::Matrix3d J;
  for (int j = 0; j < 3; ++j) {
    ThetaVector up = theta, down = theta;
    double* pu = j == 0 ? &up.theta1 : j == 1 ? &up.theta2 : &up.theta3;
    double* pd = j == 0 ? &down.theta1 : j == 1 ? &down.theta2 : &down.theta3;
    const double h = step_for(*pu, rel_step);
    *pu += h;
    *pd -= h;
    J.col(j) = (structural_vector(up) - structural_vector(down)) / (2.0 * h);
  }
  return J;
}

Eigen::Vector3d delta_method_se(const Eigen::Matrix3d& theta_cov, const ThetaVector& theta, double rel_step) {
  const Eigen::Matrix3d J = structural_jacobian_fd(theta, rel_step);
  const Eigen::Matrix3d V = J * theta_cov * J.transpose();
  return V.diagonal().cwiseMax(0.0).cwiseSqrt();
}

GmmResult estimate_cell(const Sample& sample, int cell, const GmmOptions& options) {
  const MomentSet moments = empirical_moments(sample, cell);
  GmmResult res;
  res.cell = cell;
  res.n = static_cast<std::size_t>(moments.n);
  res.theta = solve_theta(moments);
  const Psi<double> psi = psi_matrix(res.theta);

  std::array<CompensatedSum, 3> rsum;
  CompensatedSum zsum;
  for (const auto& o : sample.rows()) {
    if (o.cell != cell) continue;
    const Eigen::Vector3d r = psi * observables(o.y, o.t);
    for (int j = 0; j < 3; ++j) rsum[j].add(r(j));
    zsum.add(o.z);
  }
  const double n = moments.n;
  for (int j = 0; j < 3; ++j) res.kappa(j) = rsum[j].value() / n;
  const double zbar = zsum.value() / n;

  // Second pass: residuals g_i = (r_i - kappa) (x) (1, z_i), their outer
  // products, and the Jacobian of the stacked moments.
  Matrix6d S = Matrix6d::Zero();
  Matrix6d G = Matrix6d::Zero();
  std::array<CompensatedSum, 3> mean_res, orth;
  for (const auto& o : sample.rows()) {
    if (o.cell != cell) continue;
    const Vector6d w = observables(o.y, o.t);
    const Eigen::Vector3d r = psi * w - res.kappa;
    Vector6d g;
    g << r, r * o.z;
    S.noalias() += g * g.transpose();
    for (int j = 0; j < 3; ++j) {
      mean_res[j].add(r(j));
      orth[j].add(r(j) * (o.z - zbar));
    }
    // d r / d (theta1, theta2, theta3, kappa1, kappa2, kappa3)
    Eigen::Matrix<double, 3, 6> dr = Eigen::Matrix<double, 3, 6>::Zero();
    dr(0, 0) = -w(0);
    dr(1, 0) = -2.0 * w(2);
    dr(2, 0) = -3.0 * w(4);
    dr(1, 1) = w(0);
    dr(2, 1) = 3.0 * w(2);
    dr(2, 2) = -w(0);
    dr.rightCols<3>() = -Eigen::Matrix3d::Identity();
    G.topRows<3>() += dr;
    G.bottomRows<3>() += dr * static_cast<double>(o.z);
  }
  S /= n;
  G /= n;
  for (int j = 0; j < 3; ++j) {
    res.mean_residual(j) = mean_res[j].value() / n;
    res.orthogonality(j) = orth[j].value() / n;
  }
  const Eigen::FullPivLU<Matrix6d> lu(G);
  if (!lu.isInvertible())
    throw Error(ErrorKind::identification, "no_first_stage", "moment Jacobian is singular in cell " +
                                                                 std::to_string(cell));
  const Matrix6d Ginv = lu.inverse();
  res.cov = Ginv * S * Ginv.transpose() / n;

  PointTolerances tol;
  tol.theta1_zero = options.theta1_tol.value_or(default_theta1_tolerance(moments));
  const double se1 = res.theta_se(0);
  res.weak = std::abs(res.theta.theta1) < options.weak_band * se1;
  if (res.weak) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "weak identification: |theta1| = %.9g below %.9g standard errors (%.9g)",
                  std::abs(res.theta.theta1), options.weak_band, se1);
    res.warnings.emplace_back(buf);
    PointEstimate est;
    est.theta = res.theta;
    est.branch = Branch::beta_zero;
    res.structural = est;
    res.se_note = "unavailable: weak identification band";
    return res;
  }
  try {
    res.structural = theta_to_structural(res.theta, tol);
  } catch (const Error& e) {
    res.structural_error = e.what();
    res.structural_error_code = e.code();
    res.se_note = "unavailable: structural recovery failed";
    return res;
  }
  if (res.structural->branch != Branch::full) {
    res.se_note = "unavailable: beta_zero branch";
    return res;
  }
  res.se = delta_method_se(res.cov.topLeftCorner<3, 3>(), res.theta, options.fd_step);
  return res;
}

}  // namespace binmis
