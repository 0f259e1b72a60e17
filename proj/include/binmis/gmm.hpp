#ifndef BINMIS_GMM_HPP
#define BINMIS_GMM_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "binmis/point_id.hpp"
#include "binmis/types.hpp"

namespace binmis {

template <typename Scalar>
using Psi = Eigen::Matrix<Scalar, 3, 6>;

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Rows of psi * w are (y - th1 T, y^2 - 2 th1 yT + th2 T, y^3 - 3 th1 y^2 T + 3 th2 yT - th3 T).
template <typename Scalar>
Psi<Scalar> psi_matrix(const ThetaT<Scalar>& th) {
  Psi<Scalar> psi = Psi<Scalar>::Zero();
  psi(0, 0) = -th.theta1;
  psi(0, 1) = Scalar(1);
  psi(1, 0) = th.theta2;
  psi(1, 2) = Scalar(-2) * th.theta1;
  psi(1, 3) = Scalar(1);
  psi(2, 0) = -th.theta3;
  psi(2, 2) = Scalar(3) * th.theta2;
  psi(2, 4) = Scalar(-3) * th.theta1;
  psi(2, 5) = Scalar(1);
  return psi;
}

// w = (T, y, yT, y^2, y^2 T, y^3).
inline Vector6d observables(double y, int t) {
  const double tt = t;
  Vector6d w;
  w << tt, y, y * tt, y * y, y * y * tt, y * y * y;
  return w;
}

struct GmmOptions {
  std::optional<double> theta1_tol;  // default: default_theta1_tolerance
  double weak_band = 3.0;            // |theta1| < weak_band * SE(theta1) is weak
  double fd_step = 1e-6;             // relative step for the structural gradient
};

struct GmmResult {
  int cell = 0;
  std::size_t n = 0;
  ThetaVector theta;
  Eigen::Vector3d kappa = Eigen::Vector3d::Zero();
  Matrix6d cov = Matrix6d::Zero();                   // of (theta1..3, kappa1..3)
  Eigen::Vector3d orthogonality = Eigen::Vector3d::Zero();  // sample Cov(residual_j, z)
  Eigen::Vector3d mean_residual = Eigen::Vector3d::Zero();
  std::optional<PointEstimate> structural;
  std::string structural_error;
  std::string structural_error_code;
  std::optional<Eigen::Vector3d> se;  // (beta, alpha0, alpha1)
  std::string se_note;
  bool weak = false;
  std::vector<std::string> warnings;

  double theta_se(int j) const { return std::sqrt(cov(j, j)); }
};

GmmResult estimate_cell(const Sample& sample, int cell, const GmmOptions& options = {});

// Central-difference Jacobian of theta -> (beta, alpha0, alpha1).
Eigen::Matrix3d structural_jacobian_fd(const ThetaVector& theta, double rel_step = 1e-6);

// sqrt(diag(J cov J^T)) with cov the 3x3 covariance of theta hat.
Eigen::Vector3d delta_method_se(const Eigen::Matrix3d& theta_cov, const ThetaVector& theta, double rel_step = 1e-6);

}  // namespace binmis

#endif  // BINMIS_GMM_HPP
