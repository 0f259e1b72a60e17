#ifndef BINMIS_ORACLE_HPP
#define BINMIS_ORACLE_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "binmis/dgp.hpp"
#include "binmis/moments.hpp"
#include "binmis/partial_id.hpp"

namespace binmis {

// min c'x subject to A x = b, 0 <= x <= upper. Dense two-phase simplex with
// Bland's rule; upper bounds enter as slack rows.
struct LinearProgram {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd upper;
};

struct LpSolution {
  bool feasible = false;
  double objective = 0.0;
  Eigen::VectorXd x;
  double infeasibility = 0.0;  // phase-one optimum
};

LpSolution solve_lp(const LinearProgram& lp, double tol = 1e-10);

constexpr std::size_t kMaxOracleSupport = 32;

// Finite observable distribution of one cell plus a candidate (alpha0, alpha1).
struct DiscreteInstance {
  std::vector<double> support;                         // sorted, distinct
  ByTreatmentInstrument<std::vector<double>> mass;     // [t][k], P(y = support_i | T=t, z=k)
  double q = 0.5;
  std::array<double, 2> p{};                           // P(T=1|z=k)
  double alpha0 = 0.0;
  double alpha1 = 0.0;

  void validate() const;
};

// Exact observable law of a discrete-mode spec at its true alphas.
DiscreteInstance discretize(const DGPSpec& spec);

// The instance's distribution as CellData (population-source moments).
CellData cell_data(const DiscreteInstance& instance);

// Latent sub-mass LP for all four (t,k): g1 + g0 = F_tk, total masses
// (r_tk, 1 - r_tk), means mu1_k and mu0_k.
bool lp_feasible_mixture(const DiscreteInstance& instance);

// Largest (or smallest) achievable mean of a sub-mass of total weight r.
double lp_extreme_mean(const std::vector<double>& support, const std::vector<double>& mass, double r, bool maximize);

// LP decision at every point of the grid, in sharp_set_grid order.
std::vector<GridPoint> bruteforce_sharp_set(const DiscreteInstance& instance, const AlphaGrid& grid);

// For points laid out in sharp_set_grid order: true where a grid neighbour
// (Chebyshev distance one in index space) carries a different decision.
std::vector<bool> near_boundary(const AlphaGrid& grid, const std::vector<GridPoint>& points);

struct MahajanReport {
  Eigen::Matrix2d system;           // rows (1 - p*_k, p*_k)
  double determinant = 0.0;
  int rank = 0;
  Eigen::MatrixXd kernel;           // null space basis (zero columns when rank 2)
  Eigen::Vector2d candidate;        // m * (-p*_0, 1 - p*_0): solves the k=0 equation
  double residual = 0.0;            // k=1 equation at the candidate
  bool unique_zero = false;         // only m* = 0 solves the system
  bool consistent = false;          // the candidate solves both equations
  std::string branch;               // exogenous | no_first_stage | inconsistent
};

MahajanReport mahajan_incompatibility_check(double p_star_0, double p_star_1, double m);

}  // namespace binmis

#endif  // BINMIS_ORACLE_HPP
