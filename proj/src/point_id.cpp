#include "binmis/point_id.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "binmis/error.hpp"

namespace binmis {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace

ThetaVector solve_theta(const MomentSet& m) {
  if (m.pi == 0.0) throw Error(ErrorKind::identification, "no_first_stage", "no first stage: Cov(T,z) = 0");
  ThetaVector th;
  th.theta1 = m.eta[0] / m.pi;
  th.theta2 = (2.0 * m.tau[0] * th.theta1 - m.eta[1]) / m.pi;
  th.theta3 = (m.eta[2] - 3.0 * m.tau[1] * th.theta1 + 3.0 * m.tau[0] * th.theta2) / m.pi;
  return th;
}

QuadraticSummary quadratic_summary(const ThetaVector& theta) {
  QuadraticSummary q;
  q.A = theta.theta2 / (theta.theta1 * theta.theta1);
  q.B = theta.theta3 / (theta.theta1 * theta.theta1 * theta.theta1);
  q.discriminant = 3.0 * q.A * q.A - 2.0 * q.B;
  const double root = std::sqrt(std::max(q.discriminant, 0.0));
  q.root_small = (q.A - root) / 2.0;
  q.root_large = (q.A + root) / 2.0;
  return q;
}

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::full:
      return "full";
    case Branch::beta_zero:
      return "beta_zero";
    case Branch::one_sided_a0:
      return "one_sided_a0";
    case Branch::one_sided_a1:
      return "one_sided_a1";
  }
  return "full";
}

double default_theta1_tolerance(const MomentSet& moments) { return 1e-8 * std::max(moments.y_rms, 1e-300); }

PointEstimate theta_to_structural(const ThetaVector& theta, const PointTolerances& tol) {
  PointEstimate est;
  est.theta = theta;
  if (!std::isfinite(theta.theta1) || !std::isfinite(theta.theta2) || !std::isfinite(theta.theta3))
    throw Error(ErrorKind::identification, "inconsistent_moments", "moments inconsistent with model: non-finite theta");
  if (std::abs(theta.theta1) <= tol.theta1_zero) {
    est.branch = Branch::beta_zero;
    est.beta = 0.0;
    return est;
  }
  const auto q = quadratic_summary(theta);
  if (q.discriminant < -tol.discriminant)
    throw Error(ErrorKind::identification, "inconsistent_moments",
                "moments inconsistent with model: 3A^2 - 2B = " + fmt(q.discriminant) + " < 0");
  est.quadratic = q;
  double a0 = q.root_small;
  double a1 = 1.0 - q.root_large;
  if (a0 < -tol.range || a1 < -tol.range || a0 >= 1.0 || a1 >= 1.0 || !(a0 + a1 < 1.0))
    throw Error(ErrorKind::identification, "inconsistent_moments",
                "moments inconsistent with model: roots (" + fmt(q.root_small) + ", " + fmt(q.root_large) +
                    ") imply alpha0 = " + fmt(a0) + ", alpha1 = " + fmt(a1));
  est.alpha0 = std::max(a0, 0.0);
  est.alpha1 = std::max(a1, 0.0);
  est.beta = structural_map(theta).beta;
  est.branch = Branch::full;
  return est;
}

double alpha_difference(double theta1, double theta2) {
  if (theta1 == 0.0)
    throw Error(ErrorKind::identification, "beta_zero", "difference unidentified at beta = 0");
  return 1.0 - theta2 / (theta1 * theta1);
}

PointEstimate one_sided_point_estimate(double theta1, double theta2, OneSided side, double range_tol) {
  if (theta1 == 0.0)
    throw Error(ErrorKind::identification, "beta_zero", "one-sided estimate unidentified at beta = 0");
  const double ratio = theta2 / (theta1 * theta1);
  PointEstimate est;
  est.theta.theta1 = theta1;
  est.theta.theta2 = theta2;
  est.theta.theta3 = std::nan("");
  double a = 0.0;
  if (side == OneSided::alpha0_zero) {
    a = 1.0 - ratio;
    est.alpha0 = 0.0;
    est.branch = Branch::one_sided_a0;
  } else {
    a = ratio - 1.0;
    est.alpha1 = 0.0;
    est.branch = Branch::one_sided_a1;
  }
  if (a < -range_tol || a >= 1.0)
    throw Error(ErrorKind::identification, "one_sided_rejected",
                "one-sided restriction rejected by moments: implied rate " + fmt(a));
  a = std::max(a, 0.0);
  if (side == OneSided::alpha0_zero)
    est.alpha1 = a;
  else
    est.alpha0 = a;
  est.beta = theta1 * (1.0 - a);
  return est;
}

double intercept(const MomentSet& moments, double beta, double alpha0, double alpha1, int k) {
  const double p_star = (moments.p[k] - alpha0) / (1.0 - alpha0 - alpha1);
  return moments.ybar[k] - beta * p_star;
}

}  // namespace binmis
