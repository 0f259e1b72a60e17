#ifndef BINMIS_PARTIAL_ID_HPP
#define BINMIS_PARTIAL_ID_HPP

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "binmis/moments.hpp"
#include "binmis/types.hpp"

namespace binmis {

// {alpha0 <= min_k p_k, alpha1 <= 1 - max_k p_k}, intersected with alpha0 + alpha1 < 1.
struct AlphaRectangle {
  double alpha0_max = 0.0;
  double alpha1_max = 0.0;

  bool contains(double alpha0, double alpha1) const noexcept;
};

AlphaRectangle alpha_rectangle(const MomentSet& moments);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x, double slack = 0.0) const noexcept { return x >= lo - slack && x <= hi + slack; }
  double width() const noexcept { return hi - lo; }
};

// Closed interval between Cov(y,z)/Var(z) and Cov(y,z)/Cov(T,z).
Interval beta_interval_first_order(const MomentSet& moments);

// r_tk = P(T*=1 | T=t, z=k) for one k.
struct MixingWeights {
  double r0 = 0.0;
  double r1 = 0.0;
};

// p*_k = (p_k - alpha0) / (1 - alpha0 - alpha1).
double latent_first_stage(double alpha0, double alpha1, double p_k);

MixingWeights mixing_weights(double alpha0, double alpha1, double p_star_k, double p_k);

// Means of y given T*=0 and T*=1 at z=k.
struct LatentMeans {
  double mu0 = 0.0;
  double mu1 = 0.0;
};

LatentMeans solve_conditional_means(double alpha0, double alpha1, const MomentSet& moments, int k);

// Sandwich check of the T*=1 latent mean against the fractional truncated
// means of both observed sub-cells at z=k. A sub-cell with r in {0,1} leaves
// its components unrestricted.
bool feasible_at(double alpha0, double alpha1, const CellData& data, int k);

struct AlphaGrid {
  std::vector<double> alpha0;
  std::vector<double> alpha1;

  // Coordinates i*h up to the rectangle bounds.
  static AlphaGrid by_step(const AlphaRectangle& rect, double h);
  // n0 x n1 evenly spaced points spanning [0, max] on each axis.
  static AlphaGrid by_count(const AlphaRectangle& rect, int n0, int n1);
};

struct GridPoint {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  bool feasible = false;
};

enum class CaseLabel { both_k, one_k, none };

std::string_view to_string(CaseLabel label);

struct SharpSet {
  double grid_step = 0.0;
  std::vector<GridPoint> points;
  CaseLabel label = CaseLabel::none;
  std::array<bool, 2> restricts{};  // whether z=k contributes a feasibility test
  Interval beta;
  AlphaRectangle rect;
  std::array<double, 2> mean_tol{};

  std::size_t feasible_count() const;
  // Grid point closest to (alpha0, alpha1) in Euclidean distance.
  const GridPoint& nearest(double alpha0, double alpha1) const;
};

constexpr double kDefaultGridStep = 0.005;

// Default per-k tolerance for the equal-means test: 2 SE of mu_0k - mu_1k
// (empirical) or exactly zero (population).
std::array<double, 2> default_mean_tolerance(const CellData& data);

SharpSet sharp_set_grid(const CellData& data, const AlphaGrid& grid,
                        std::optional<std::array<double, 2>> mean_tol = std::nullopt);
SharpSet sharp_set_grid(const Sample& sample, int cell, double h = kDefaultGridStep,
                        std::optional<double> mean_tol = std::nullopt);

}  // namespace binmis

#endif  // BINMIS_PARTIAL_ID_HPP
