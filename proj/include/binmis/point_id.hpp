#ifndef BINMIS_POINT_ID_HPP
#define BINMIS_POINT_ID_HPP

#include <cmath>
#include <optional>
#include <string_view>

#include "binmis/types.hpp"

namespace binmis {

// theta as a function of (beta, alpha0, alpha1).
template <typename Scalar>
ThetaT<Scalar> forward_theta(const Scalar& beta, const Scalar& alpha0, const Scalar& alpha1) {
  const Scalar s = Scalar(1) - alpha0 - alpha1;
  ThetaT<Scalar> th;
  th.theta1 = beta / s;
  th.theta2 = th.theta1 * th.theta1 * (Scalar(1) + alpha0 - alpha1);
  th.theta3 = th.theta1 * th.theta1 * th.theta1 * (s * s + Scalar(6) * alpha0 * (Scalar(1) - alpha1));
  return th;
}

template <typename Scalar>
struct StructuralT {
  Scalar beta{};
  Scalar alpha0{};
  Scalar alpha1{};
};

// Inverse of forward_theta for theta1 != 0, without range checks. The
// discriminant 3A^2 - 2B is clamped at zero.
template <typename Scalar>
StructuralT<Scalar> structural_map(const ThetaT<Scalar>& th) {
  using std::sqrt;
  const Scalar A = th.theta2 / (th.theta1 * th.theta1);
  const Scalar B = th.theta3 / (th.theta1 * th.theta1 * th.theta1);
  Scalar disc = Scalar(3) * A * A - Scalar(2) * B;
  if (disc < Scalar(0)) disc = Scalar(0);
  const Scalar root = sqrt(disc);
  StructuralT<Scalar> out;
  out.alpha0 = (A - root) / Scalar(2);
  out.alpha1 = Scalar(1) - (A + root) / Scalar(2);
  const Scalar sign = th.theta1 < Scalar(0) ? Scalar(-1) : Scalar(1);
  out.beta = sign * sqrt(Scalar(3) * (th.theta2 / th.theta1) * (th.theta2 / th.theta1) -
                         Scalar(2) * th.theta3 / th.theta1);
  return out;
}

ThetaVector solve_theta(const MomentSet& moments);

QuadraticSummary quadratic_summary(const ThetaVector& theta);

enum class Branch { full, beta_zero, one_sided_a0, one_sided_a1 };

std::string_view to_string(Branch branch);

struct PointEstimate {
  double beta = 0.0;
  std::optional<double> alpha0;  // missing when unidentified
  std::optional<double> alpha1;
  ThetaVector theta;
  std::optional<QuadraticSummary> quadratic;
  Branch branch = Branch::full;
};

struct PointTolerances {
  double theta1_zero = 1e-8;
  double discriminant = 1e-8;  // negative values above -tol are clamped to 0
  double range = 1e-9;         // slack on the [0,1) checks of the alphas
};

// 1e-8 times the root mean square of y.
double default_theta1_tolerance(const MomentSet& moments);

PointEstimate theta_to_structural(const ThetaVector& theta, const PointTolerances& tol = {});

// alpha1 - alpha0 = 1 - theta2 / theta1^2.
double alpha_difference(double theta1, double theta2);

enum class OneSided { alpha0_zero, alpha1_zero };

PointEstimate one_sided_point_estimate(double theta1, double theta2, OneSided side, double range_tol = 1e-9);

// c = E[y|z=k] - beta * p*_k. Derived from the mean equation, not a theorem.
double intercept(const MomentSet& moments, double beta, double alpha0, double alpha1, int k = 0);

}  // namespace binmis

#endif  // BINMIS_POINT_ID_HPP
