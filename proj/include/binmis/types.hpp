#ifndef BINMIS_TYPES_HPP
#define BINMIS_TYPES_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace binmis {

// Two-index arrays are indexed [t][k]: observed treatment t, instrument value k.
template <typename T>
using ByTreatmentInstrument = std::array<std::array<T, 2>, 2>;

struct Observation {
  double y = 0.0;
  int t = 0;  // observed (possibly mis-classified) treatment, 0/1
  int z = 0;  // instrument, 0/1
  int cell = 0;
};

// Ordered, immutable collection of observations. Construction rejects
// non-binary t/z, non-finite y and negative cell ids.
class Sample {
 public:
  Sample() = default;
  explicit Sample(std::vector<Observation> rows);

  const std::vector<Observation>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  // Sorted distinct cell ids.
  std::vector<int> cells() const;

  // n[t][k] for one covariate cell.
  ByTreatmentInstrument<std::size_t> counts(int cell) const;

 private:
  std::vector<Observation> rows_;
};

// Latent structural parameters of y = c + beta*T* + eps for one cell.
class StructuralParams {
 public:
  // Throws Error(input) unless alpha0, alpha1 in [0,1) and alpha0 + alpha1 < 1.
  StructuralParams(double c, double beta, double alpha0, double alpha1);

  double c() const noexcept { return c_; }
  double beta() const noexcept { return beta_; }
  double alpha0() const noexcept { return alpha0_; }
  double alpha1() const noexcept { return alpha1_; }

 private:
  double c_;
  double beta_;
  double alpha0_;
  double alpha1_;
};

enum class MomentSource { empirical, population };

// Everything observable about one covariate cell that the estimators use.
struct MomentSet {
  double q = 0.0;                 // P(z=1)
  std::array<double, 2> p{};      // p_k = P(T=1|z=k)
  double pi = 0.0;                // Cov(T,z)
  std::array<double, 3> eta{};    // Cov(y^j,z), j=1..3
  std::array<double, 2> tau{};    // Cov(T y^j,z), j=1..2
  ByTreatmentInstrument<double> mu{};  // E[y|T=t,z=k]
  std::array<double, 2> ybar{};   // E[y|z=k]
  double y_rms = 0.0;             // sqrt(E[y^2]), a scale for tolerances
  double n = 0.0;                 // sample size (total weight); 0 for population
  MomentSource source = MomentSource::empirical;
};

template <typename Scalar>
struct ThetaT {
  Scalar theta1{};
  Scalar theta2{};
  Scalar theta3{};

  // 3*theta2^2 - 2*theta1*theta3; equals theta1^4 (1-alpha0-alpha1)^2 = (theta1*beta)^2
  // under the model.
  Scalar discriminant() const { return Scalar(3) * theta2 * theta2 - Scalar(2) * theta1 * theta3; }
};

using ThetaVector = ThetaT<double>;

// Roots of (A^2 - B) + 2 A r - 2 r^2 = 0 with A = theta2/theta1^2, B = theta3/theta1^3.
struct QuadraticSummary {
  double A = 0.0;
  double B = 0.0;
  double discriminant = 0.0;  // 3A^2 - 2B
  double root_small = 0.0;
  double root_large = 0.0;
};

struct CellValidity {
  int cell = 0;
  std::size_t n = 0;
  ByTreatmentInstrument<std::size_t> counts{};
  double q_hat = 0.0;
  std::array<double, 2> p_hat{};
  double first_stage_diff = 0.0;  // p_hat1 - p_hat0
  double first_stage_se = 0.0;
  bool instrument_degenerate = false;
  bool no_first_stage = false;
  bool empty_subcell = false;

  bool ok() const noexcept { return !instrument_degenerate && !no_first_stage && !empty_subcell; }
  std::vector<std::string> flags() const;
};

struct ValidityReport {
  std::vector<CellValidity> cells;

  bool ok() const noexcept;
  const CellValidity& at(int cell) const;
};

ValidityReport validate_sample(const Sample& sample);

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace binmis

#endif  // BINMIS_TYPES_HPP
