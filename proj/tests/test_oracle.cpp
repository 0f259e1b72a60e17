#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "binmis/dgp.hpp"
#include "binmis/error.hpp"
#include "binmis/moments.hpp"
#include "binmis/oracle.hpp"
#include "binmis/partial_id.hpp"
#include "generators.hpp"

using namespace binmis;

namespace {

// Two-point support, sub-cell (T=t, z=k) puts mass f[t][k] on y = 1.
DiscreteInstance two_point(std::array<double, 2> p, ByTreatmentInstrument<double> f) {
  DiscreteInstance inst;
  inst.support = {0.0, 1.0};
  inst.q = 0.5;
  inst.p = p;
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < 2; ++k) inst.mass[t][k] = {1.0 - f[t][k], f[t][k]};
  return inst;
}

DiscreteInstance random_instance(testing::Gen& g) {
  return discretize(build_spec(testing::random_params(g, g.coin())));
}

}  // namespace

TEST_CASE("solve_lp on small programs") {
  // min -x - 2y subject to x + y = 1, 0 <= x, y <= 0.7
  LinearProgram lp;
  lp.A = Eigen::MatrixXd::Ones(1, 2);
  lp.b = Eigen::VectorXd::Constant(1, 1.0);
  lp.c = Eigen::Vector2d(-1.0, -2.0);
  lp.upper = Eigen::Vector2d(0.7, 0.7);
  const auto sol = solve_lp(lp);
  REQUIRE(sol.feasible);
  CHECK(sol.x(0) == doctest::Approx(0.3));
  CHECK(sol.x(1) == doctest::Approx(0.7));
  CHECK(sol.objective == doctest::Approx(-1.7));

  // x + y = 2 exceeds the bounds.
  lp.b(0) = 2.0;
  const auto bad = solve_lp(lp);
  CHECK_FALSE(bad.feasible);
  CHECK(bad.infeasibility > 0.0);

  LinearProgram shape = lp;
  shape.c = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(solve_lp(shape), Error);
}

TEST_CASE("LP extreme means equal fractional truncated means") {
  testing::Gen g(71);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = g.integer(1, 32);
    std::vector<double> support(static_cast<std::size_t>(n)), mass(static_cast<std::size_t>(n));
    double x = g.uniform(-5.0, 0.0), total = 0.0;
    for (int i = 0; i < n; ++i) {
      x += g.uniform(0.01, 1.0);
      support[static_cast<std::size_t>(i)] = x;
      mass[static_cast<std::size_t>(i)] = g.uniform(0.0, 1.0);
      total += mass[static_cast<std::size_t>(i)];
    }
    for (double& m : mass) m /= total;
    const double r = g.uniform(0.01, 1.0);
    const auto tm = mass_truncated_means(EmpiricalCell(support, mass), r);
    CHECK(std::abs(lp_extreme_mean(support, mass, r, true) - tm.upper) < 1e-9);
    CHECK(std::abs(lp_extreme_mean(support, mass, r, false) - tm.lower) < 1e-9);
  }
}

TEST_CASE("instance validation") {
  DiscreteInstance inst = two_point({0.4, 0.6}, {{{0.5, 0.5}, {0.5, 0.5}}});
  CHECK_NOTHROW(inst.validate());
  inst.mass[0][0] = {0.6, 0.6};
  CHECK_THROWS_AS(inst.validate(), Error);
  inst.mass[0][0] = {0.5, 0.5};
  inst.support = {1.0, 0.0};
  CHECK_THROWS_AS(inst.validate(), Error);
  inst.support.assign(33, 0.0);
  for (std::size_t i = 0; i < inst.support.size(); ++i) inst.support[i] = static_cast<double>(i);
  CHECK_THROWS_AS(inst.validate(), Error);
  CHECK_THROWS_AS(discretize(config_c1_endog(Mode::continuous)), Error);
}

TEST_CASE("identity mixture is always feasible") {
  testing::Gen g(72);
  for (int rep = 0; rep < 50; ++rep) {
    DiscreteInstance inst = random_instance(g);
    inst.alpha0 = 0.0;
    inst.alpha1 = 0.0;
    CHECK(lp_feasible_mixture(inst));
  }
}

TEST_CASE("C1-endog truth is feasible") {
  const DiscreteInstance inst = discretize(config_c1_endog());
  CHECK(inst.alpha0 == 0.1);
  CHECK(inst.alpha1 == 0.2);
  CHECK(lp_feasible_mixture(inst));
  CHECK(inst.support.size() <= kMaxOracleSupport);
}

TEST_CASE("latent mean outside the support hull is infeasible") {
  // k = 0: p = 0.5, E[y|T=1] = 0.9, E[y|z] = 0.5. At alpha0 = 0.4 the T*=1 mean
  // is (0.5 * 0.9 - 0.4 * 0.5) / (0.5 - 0.4) = 2.5 > max support.
  DiscreteInstance inst = two_point({0.5, 0.6}, {{{0.1, 0.3}, {0.9, 0.8}}});
  inst.alpha0 = 0.4;
  inst.alpha1 = 0.0;
  const CellData data = cell_data(inst);
  CHECK(solve_conditional_means(0.4, 0.0, data.moments, 0).mu1 == doctest::Approx(2.5));
  CHECK_FALSE(lp_feasible_mixture(inst));
  CHECK_FALSE(feasible_at(0.4, 0.0, data, 0));
}

TEST_CASE("brute-force mask basics") {
  testing::Gen g(73);
  for (int rep = 0; rep < 10; ++rep) {
    const DiscreteInstance inst = random_instance(g);
    const auto rect = alpha_rectangle(cell_data(inst).moments);
    const AlphaGrid grid = AlphaGrid::by_count(rect, 21, 21);
    const auto mask = bruteforce_sharp_set(inst, grid);
    REQUIRE_FALSE(mask.empty());
    CHECK(mask.front().alpha0 == 0.0);
    CHECK(mask.front().alpha1 == 0.0);
    CHECK(mask.front().feasible);
  }
}

TEST_CASE("equal cell means give the full rectangle in the oracle") {
  DiscreteInstance inst = two_point({0.3, 0.7}, {{{0.4, 0.4}, {0.4, 0.4}}});
  const auto rect = alpha_rectangle(cell_data(inst).moments);
  const AlphaGrid grid = AlphaGrid::by_count(rect, 21, 21);
  const auto mask = bruteforce_sharp_set(inst, grid);
  CHECK(std::all_of(mask.begin(), mask.end(), [](const GridPoint& p) { return p.feasible; }));
}

TEST_CASE("oracle agrees with the analytic mask off the boundary") {
  testing::Gen g(74);
  std::vector<DiscreteInstance> instances{discretize(config_c1()), discretize(config_c1_endog()),
                                          discretize(config_null())};
  for (int rep = 0; rep < 12; ++rep) instances.push_back(random_instance(g));
  std::size_t compared = 0;
  for (const auto& inst : instances) {
    const CellData data = cell_data(inst);
    const AlphaGrid grid = AlphaGrid::by_count(alpha_rectangle(data.moments), 21, 21);
    const SharpSet set = sharp_set_grid(data, grid);
    const auto oracle = bruteforce_sharp_set(inst, grid);
    REQUIRE(oracle.size() == set.points.size());
    const auto boundary = near_boundary(grid, oracle);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      if (boundary[i]) continue;
      CAPTURE(oracle[i].alpha0);
      CAPTURE(oracle[i].alpha1);
      CHECK(oracle[i].feasible == set.points[i].feasible);
      ++compared;
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("near_boundary marks neighbours of a decision change") {
  AlphaGrid grid{{0.0, 0.1, 0.2}, {0.0, 0.1, 0.2}};
  std::vector<GridPoint> pts;
  for (double a0 : grid.alpha0)
    for (double a1 : grid.alpha1) pts.push_back({a0, a1, !(a0 == 0.2 && a1 == 0.2)});
  const auto b = near_boundary(grid, pts);
  // Only the corner and its three neighbours see a change.
  const std::vector<bool> expected{false, false, false, false, true, true, false, true, true};
  CHECK(b == expected);
  std::swap(pts[0], pts[1]);
  CHECK_THROWS_AS(near_boundary(grid, pts), Error);
}

TEST_CASE("z-invariant endogeneity is incompatible with a first stage") {
  const auto rep = mahajan_incompatibility_check(0.3, 0.7, 0.5);
  CHECK(rep.determinant == doctest::Approx(0.4));
  CHECK(rep.rank == 2);
  CHECK(rep.kernel.cols() == 0);
  CHECK(rep.unique_zero);
  CHECK_FALSE(rep.consistent);
  CHECK(rep.branch == "inconsistent");
  CHECK(rep.residual == doctest::Approx(0.2));
  // The candidate solves the z=0 equation and misses the z=1 equation by the residual.
  CHECK((rep.system.row(0) * rep.candidate)(0) == doctest::Approx(0.0).scale(1.0));
  CHECK((rep.system.row(1) * rep.candidate)(0) == doctest::Approx(rep.residual));

  const auto flat = mahajan_incompatibility_check(0.4, 0.4, 0.5);
  CHECK(flat.rank == 1);
  CHECK(flat.kernel.cols() == 1);
  CHECK((flat.system * flat.kernel).norm() < 1e-12);
  CHECK(flat.consistent);
  CHECK(flat.branch == "no_first_stage");

  const auto exog = mahajan_incompatibility_check(0.3, 0.7, 0.0);
  CHECK(exog.consistent);
  CHECK(exog.branch == "exogenous");
}

TEST_CASE("residual vanishes exactly when m = 0 or p*_0 = p*_1") {
  testing::Gen g(75);
  for (int i = 0; i < 1000; ++i) {
    const double p0 = std::round(g.uniform(0.01, 0.99) * 100.0) / 100.0;
    const double p1 = g.coin() ? p0 : std::round(g.uniform(0.01, 0.99) * 100.0) / 100.0;
    const double m = g.integer(0, 3) == 0 ? 0.0 : g.uniform(-2.0, 2.0);
    const auto rep = mahajan_incompatibility_check(p0, p1, m);
    CHECK((rep.residual == 0.0) == (m == 0.0 || p0 == p1));
    CHECK(rep.unique_zero == (p0 != p1));
  }
}
