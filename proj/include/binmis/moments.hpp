#ifndef BINMIS_MOMENTS_HPP
#define BINMIS_MOMENTS_HPP

#include <array>
#include <span>
#include <vector>

#include "binmis/dgp.hpp"
#include "binmis/types.hpp"

namespace binmis {

// Outcome distribution of one (T=t, z=k) sub-cell: sorted support with weights.
// Samples use unit weights; discretized population instances use masses.
class EmpiricalCell {
 public:
  EmpiricalCell() = default;
  // Unit weights. Throws Error(input) on an empty or non-finite input.
  explicit EmpiricalCell(std::vector<double> values);
  // Weighted atoms; zero-mass atoms are dropped, negative masses rejected.
  EmpiricalCell(std::vector<double> support, std::vector<double> masses);

  bool empty() const noexcept { return values_.empty(); }
  std::size_t count() const noexcept { return values_.size(); }
  double total_weight() const noexcept { return cum_w_.empty() ? 0.0 : cum_w_.back(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> weights() const noexcept { return weights_; }

  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  double mean() const;
  double variance() const;
  // E[y^j] under the normalized weights.
  double raw_moment(int j) const;

  // Weight and weighted sum of the first i atoms.
  double cum_weight(std::size_t i) const { return cum_w_[i]; }
  double cum_weighted_sum(std::size_t i) const { return cum_wy_[i]; }

 private:
  void finish();

  std::vector<double> values_;
  std::vector<double> weights_;
  std::vector<double> cum_w_;   // size count()+1
  std::vector<double> cum_wy_;  // size count()+1
};

// Left-continuous inverse: smallest value whose cumulative fraction reaches u.
double empirical_quantile(const EmpiricalCell& cell, double u);

struct TruncatedMeans {
  double lower = 0.0;
  double upper = 0.0;
};

// lower = mean of values <= q_low (min if none), upper = mean of values > q_high
// (max if none).
TruncatedMeans truncated_means(const EmpiricalCell& cell, double q_low, double q_high);

// Means of the lowest and of the highest fraction r of the probability mass,
// splitting an atom where the boundary falls inside it. r <= 0 gives (min, max),
// r >= 1 gives (mean, mean).
TruncatedMeans mass_truncated_means(const EmpiricalCell& cell, double r);

// Conditional raw moments E[y^j | T=t, z=k] for j = 1..3, indexed [t][k][j-1].
using ConditionalRaw = ByTreatmentInstrument<std::array<double, 3>>;

MomentSet assemble_moments(double q, std::array<double, 2> p, const ConditionalRaw& raw, double n,
                           MomentSource source);

// Requires a non-degenerate instrument and four non-empty sub-cells.
MomentSet empirical_moments(const Sample& sample, int cell);

MomentSet population_moments(const DGPSpec& spec);

// Observable distribution of one covariate cell.
struct CellData {
  int cell = 0;
  ByTreatmentInstrument<EmpiricalCell> sub;  // [t][k]
  MomentSet moments;
};

CellData cell_data(const Sample& sample, int cell);

}  // namespace binmis

#endif  // BINMIS_MOMENTS_HPP
