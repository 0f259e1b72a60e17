#ifndef BINMIS_TESTS_GENERATORS_HPP
#define BINMIS_TESTS_GENERATORS_HPP

#include <algorithm>
#include <cmath>
#include <random>

#include "binmis/dgp.hpp"
#include "binmis/types.hpp"

namespace binmis::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// beta in [-5, 5] with |beta| >= 0.1.
inline double random_beta(Gen& g) {
  const double mag = g.uniform(0.1, 5.0);
  return g.coin() ? mag : -mag;
}

// Uniform on {alpha0, alpha1 >= 0, alpha0 + alpha1 <= total}.
inline std::pair<double, double> random_alphas(Gen& g, double total = 0.9) {
  double u = g.uniform(0.0, 1.0), v = g.uniform(0.0, 1.0);
  if (u + v > 1.0) {
    u = 1.0 - u;
    v = 1.0 - v;
  }
  return {total * u, total * v};
}

inline StructuralParams random_structural(Gen& g, double beta) {
  const auto [a0, a1] = random_alphas(g);
  return StructuralParams(g.uniform(-2.0, 2.0), beta, a0, a1);
}

// Valid DGP parameters with p*_1 - p*_0 >= 0.1. The variance margin grows with
// the largest latent mean so the three-point laws stay well conditioned.
inline DGPParams random_params(Gen& g, bool endogenous, Mode mode = Mode::discrete) {
  DGPParams p;
  p.q = g.uniform(0.2, 0.8);
  p.p_star[0] = g.uniform(0.05, 0.8);
  p.p_star[1] = g.uniform(p.p_star[0] + 0.1, 0.95);
  p.structural = random_structural(g, random_beta(g));
  p.m1 = endogenous ? std::array<double, 2>{g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0)}
                    : std::array<double, 2>{0.0, 0.0};
  double worst = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double m0 = -p.m1[k] * p.p_star[k] / (1.0 - p.p_star[k]);
    worst = std::max({worst, p.m1[k] * p.m1[k], m0 * m0});
  }
  p.V = worst + (1.0 + worst) * g.uniform(0.5, 2.0);
  p.W = g.uniform(-2.0, 2.0);
  p.mode = mode;
  p.jitter = mode == Mode::continuous ? g.uniform(0.2, 2.0) : 0.0;
  return p;
}

}  // namespace binmis::testing

#endif  // BINMIS_TESTS_GENERATORS_HPP
