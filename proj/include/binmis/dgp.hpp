#ifndef BINMIS_DGP_HPP
#define BINMIS_DGP_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include "binmis/types.hpp"

namespace binmis {

// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;
  static constexpr std::string_view name = "xoshiro256**/splitmix64";

  explicit Xoshiro256(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform double in [0,1) built from the top 53 bits.
  double uniform();

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

enum class Mode { discrete, continuous };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

// Finite error distribution on (at most) three support points.
struct ThreePointDist {
  std::array<double, 3> points{};
  std::array<double, 3> probs{};

  // E[e^j] for j = 0..3.
  double raw_moment(int j) const;
};

// Three-point law with the given first three raw moments. Mass 1/3 sits at the
// mean, the remainder is a two-point law fixing variance and skewness.
// Throws Error(input, "hankel") when second - mean^2 < 0, or when it is 0 and
// third != mean^3.
ThreePointDist match_three_moments(double mean, double second, double third);

struct DGPParams {
  double q = 0.5;
  std::array<double, 2> p_star{0.3, 0.7};
  StructuralParams structural{1.0, 2.0, 0.1, 0.2};
  std::array<double, 2> m1{0.0, 0.0};  // E[eps|T*=1, z=k]
  double V = 1.0;                      // E[eps^2|z], every cell
  double W = 0.0;                      // E[eps^3|z], every cell
  Mode mode = Mode::discrete;
  double jitter = 0.0;                 // half-width of the uniform jitter (continuous mode)
};

struct DGPSpec {
  double q = 0.5;
  std::array<double, 2> p_star{};
  StructuralParams structural{0.0, 0.0, 0.0, 0.0};
  ByTreatmentInstrument<double> m{};               // [t*][k] target E[eps|T*=t*, z=k]
  double V = 0.0;
  double W = 0.0;
  ByTreatmentInstrument<ThreePointDist> dist{};    // [t*][k]
  Mode mode = Mode::discrete;
  double jitter = 0.0;
  int cell = 0;

  // Observed first stage p_k = alpha0 + (1 - alpha0 - alpha1) p*_k.
  double p_observed(int k) const;
  // P(T = t | T* = s).
  double flip_prob(int s, int t) const;
  // Raw moments of eps + jitter given (T*=s, z=k), j = 0..3.
  double error_moment(int s, int k, int j) const;
};

constexpr double kDefaultJitter = 1.5;

// Builds the per-cell error laws and checks every constraint family.
DGPSpec build_spec(const DGPParams& params);

// Observations in index order; bit-identical for identical (spec, n, seed).
Sample simulate(const DGPSpec& spec, std::size_t n, std::uint64_t seed);

struct AssumptionReport {
  double mean_independence = 0.0;  // max_k |E[eps|z=k]|
  double second_moment = 0.0;      // |E[eps^2|z=1] - E[eps^2|z=0]|
  double third_moment = 0.0;       // |E[eps^3|z=1] - E[eps^3|z=0]|
  double cell_moments = 0.0;       // max |moment of D_tk - target|
  double distribution = 0.0;       // max(|sum probs - 1|, negative mass)
  bool first_stage = false;        // p*_0 != p*_1
  bool misclassification_bound = false;
  bool independent_flips = true;   // T drawn from T* alone: 2(i), 2(iii), 7(i)
  double endogeneity = 0.0;        // max_k |E[eps|T*=1, z=k]|, the prescribed level
  double max_cell_mean = 0.0;      // max |E[eps|T*=t, z=k]| over all four cells
  bool mahajan_condition = false;  // E[eps|T*=t, z] free of z

  double max_violation() const;
  bool ok(double tolerance = 1e-12) const;
};

AssumptionReport verify_assumptions(const DGPSpec& spec);

// Shipped configurations.
DGPSpec config_c1(Mode mode = Mode::discrete);        // exogenous, eps == 0
DGPSpec config_c1_endog(Mode mode = Mode::discrete);  // m_1k = 0.5, V = 2, W = 0.5
DGPSpec config_null(Mode mode = Mode::discrete);      // beta = 0, endogenous

}  // namespace binmis

#endif  // BINMIS_DGP_HPP
