#include "binmis/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binmis/error.hpp"

namespace binmis {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  for (auto& word : s_) word = splitmix64(seed);
}

Xoshiro256::result_type Xoshiro256::operator()() {
  const auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::string_view to_string(Mode mode) { return mode == Mode::discrete ? "discrete" : "continuous"; }

Mode parse_mode(std::string_view text) {
  if (text == "discrete") return Mode::discrete;
  if (text == "continuous") return Mode::continuous;
  throw Error(ErrorKind::input, "bad_mode", "mode must be discrete or continuous, got '" + std::string(text) + "'");
}

double ThreePointDist::raw_moment(int j) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < 3; ++i) acc += probs[i] * std::pow(points[i], j);
  return acc;
}

ThreePointDist match_three_moments(double mean, double second, double third) {
  const double scale = std::max({1.0, std::abs(second), std::abs(mean * mean)});
  const double variance = second - mean * mean;
  if (variance < -1e-14 * scale) {
    throw Error(ErrorKind::input, "variance_bound",
                "Hankel condition violated: second raw moment " + std::to_string(second) +
                    " is below mean^2 = " + std::to_string(mean * mean));
  }
  ThreePointDist d;
  if (variance <= 1e-14 * scale) {
    if (std::abs(third - mean * mean * mean) > 1e-12 * std::max(1.0, std::abs(third))) {
      throw Error(ErrorKind::input, "hankel",
                  "zero variance requires third raw moment = mean^3 (point mass)");
    }
    d.points = {mean, mean, mean};
    d.probs = {1.0, 0.0, 0.0};
    return d;
  }
  const double sd = std::sqrt(variance);
  const double central3 = third - 3.0 * mean * second + 2.0 * mean * mean * mean;
  const double skew = central3 / (sd * sd * sd);

  constexpr double w0 = 1.0 / 3.0;
  const double g = skew * std::sqrt(1.0 - w0);  // skewness required of the two-point part
  const double p = 0.5 * (1.0 - g / std::sqrt(g * g + 4.0));
  const double sigma = std::sqrt(1.0 / (1.0 - w0));
  const double upper = std::sqrt((1.0 - p) / p);
  const double lower = -std::sqrt(p / (1.0 - p));
  d.points = {mean, mean + sd * sigma * upper, mean + sd * sigma * lower};
  d.probs = {w0, (1.0 - w0) * p, (1.0 - w0) * (1.0 - p)};
  return d;
}

double DGPSpec::p_observed(int k) const {
  const double a0 = structural.alpha0();
  const double a1 = structural.alpha1();
  return a0 + (1.0 - a0 - a1) * p_star[k];
}

double DGPSpec::flip_prob(int s, int t) const {
  const double a0 = structural.alpha0();
  const double a1 = structural.alpha1();
  if (s == 1) return t == 1 ? 1.0 - a1 : a1;
  return t == 1 ? a0 : 1.0 - a0;
}

double DGPSpec::error_moment(int s, int k, int j) const {
  const auto& d = dist[s][k];
  const double u2 = mode == Mode::continuous ? jitter * jitter / 3.0 : 0.0;
  switch (j) {
    case 0:
      return d.raw_moment(0);
    case 1:
      return d.raw_moment(1);
    case 2:
      return d.raw_moment(2) + u2 * d.raw_moment(0);
    case 3:
      return d.raw_moment(3) + 3.0 * d.raw_moment(1) * u2;
    default:
      throw Error(ErrorKind::input, "bad_moment", "error moments available for j <= 3");
  }
}

DGPSpec build_spec(const DGPParams& params) {
  if (!(params.q > 0.0 && params.q < 1.0))
    throw Error(ErrorKind::input, "invalid_spec", "q must lie in (0,1)");
  for (double ps : params.p_star)
    if (!(ps > 0.0 && ps < 1.0))
      throw Error(ErrorKind::input, "invalid_spec", "p_star_k must lie in (0,1)");
  if (params.p_star[0] == params.p_star[1])
    throw Error(ErrorKind::input, "no_first_stage", "p_star_0 == p_star_1 violates instrument relevance");
  if (!std::isfinite(params.V) || !std::isfinite(params.W) || !std::isfinite(params.m1[0]) ||
      !std::isfinite(params.m1[1]))
    throw Error(ErrorKind::input, "invalid_spec", "moment targets must be finite");
  if (params.mode == Mode::continuous && !(params.jitter >= 0.0))
    throw Error(ErrorKind::input, "invalid_spec", "jitter half-width must be >= 0");

  DGPSpec spec;
  spec.q = params.q;
  spec.p_star = params.p_star;
  spec.structural = params.structural;
  spec.V = params.V;
  spec.W = params.W;
  spec.mode = params.mode;
  spec.jitter = params.mode == Mode::continuous ? params.jitter : 0.0;
  for (int k = 0; k < 2; ++k) {
    spec.m[1][k] = params.m1[k];
    spec.m[0][k] = -params.m1[k] * params.p_star[k] / (1.0 - params.p_star[k]);
  }
  for (int s = 0; s < 2; ++s) {
    for (int k = 0; k < 2; ++k) {
      try {
        spec.dist[s][k] = match_three_moments(spec.m[s][k], spec.V, spec.W);
      } catch (const Error& e) {
        throw Error(e.kind(), e.code(),
                    "cell (T*=" + std::to_string(s) + ", z=" + std::to_string(k) + "): " + e.what());
      }
    }
  }
  const auto report = verify_assumptions(spec);
  const double tol = 1e-10 * std::max({1.0, std::abs(spec.V), std::abs(spec.W)});
  if (!report.ok(tol))
    throw Error(ErrorKind::invariant, "spec_invariant",
                "constructed spec violates its constraints by " + std::to_string(report.max_violation()));
  return spec;
}

namespace {

constexpr std::size_t kBlockSize = std::size_t{1} << 16;

std::size_t draw_support(const ThreePointDist& d, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (d.probs[i] <= 0.0) continue;
    last = i;
    acc += d.probs[i];
    if (u < acc) return i;
  }
  return last;
}

}  // namespace

Sample simulate(const DGPSpec& spec, std::size_t n, std::uint64_t seed) {
  const double c = spec.structural.c();
  const double beta = spec.structural.beta();
  const double a0 = spec.structural.alpha0();
  const double a1 = spec.structural.alpha1();
  const bool jittered = spec.mode == Mode::continuous && spec.jitter > 0.0;

  std::vector<Observation> rows(n);
  // Each block has its own stream so blocks can be generated independently.
  for (std::size_t start = 0, block = 0; start < n; start += kBlockSize, ++block) {
    std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (block + 1));
    Xoshiro256 rng(splitmix64(state));
    const std::size_t stop = std::min(n, start + kBlockSize);
    for (std::size_t i = start; i < stop; ++i) {
      const double uz = rng.uniform();
      const double us = rng.uniform();
      const double ue = rng.uniform();
      const double uj = rng.uniform();
      const double uf = rng.uniform();
      const int z = uz < spec.q ? 1 : 0;
      const int s = us < spec.p_star[z] ? 1 : 0;
      const auto& d = spec.dist[s][z];
      double eps = d.points[draw_support(d, ue)];
      if (jittered) eps += (2.0 * uj - 1.0) * spec.jitter;
      const int t = s == 1 ? (uf < a1 ? 0 : 1) : (uf < a0 ? 1 : 0);
      rows[i] = Observation{c + beta * s + eps, t, z, spec.cell};
    }
  }
  return Sample(std::move(rows));
}

double AssumptionReport::max_violation() const {
  return std::max({mean_independence, second_moment, third_moment, cell_moments, distribution});
}

bool AssumptionReport::ok(double tolerance) const {
  return max_violation() < tolerance && first_stage && misclassification_bound && independent_flips;
}

AssumptionReport verify_assumptions(const DGPSpec& spec) {
  AssumptionReport r;
  std::array<std::array<double, 4>, 2> by_z{};  // E[eps^j | z=k]
  for (int k = 0; k < 2; ++k) {
    for (int s = 0; s < 2; ++s) {
      const double w = s == 1 ? spec.p_star[k] : 1.0 - spec.p_star[k];
      for (int j = 1; j <= 3; ++j) by_z[k][j] += w * spec.error_moment(s, k, j);

      const auto& d = spec.dist[s][k];
      r.cell_moments = std::max({r.cell_moments, std::abs(d.raw_moment(1) - spec.m[s][k]),
                                 std::abs(d.raw_moment(2) - spec.V), std::abs(d.raw_moment(3) - spec.W)});
      r.distribution = std::max(r.distribution, std::abs(d.raw_moment(0) - 1.0));
      for (double p : d.probs) r.distribution = std::max(r.distribution, -p);
      r.max_cell_mean = std::max(r.max_cell_mean, std::abs(d.raw_moment(1)));
      if (s == 1) r.endogeneity = std::max(r.endogeneity, std::abs(d.raw_moment(1)));
    }
  }
  r.mean_independence = std::max(std::abs(by_z[0][1]), std::abs(by_z[1][1]));
  r.second_moment = std::abs(by_z[1][2] - by_z[0][2]);
  r.third_moment = std::abs(by_z[1][3] - by_z[0][3]);
  r.first_stage = spec.p_star[0] != spec.p_star[1];
  r.misclassification_bound = spec.structural.alpha0() + spec.structural.alpha1() < 1.0;
  r.independent_flips = true;
  r.mahajan_condition = true;
  for (int s = 0; s < 2; ++s)
    if (std::abs(spec.dist[s][0].raw_moment(1) - spec.dist[s][1].raw_moment(1)) > 1e-12)
      r.mahajan_condition = false;
  return r;
}

namespace {

DGPParams canonical(Mode mode) {
  DGPParams p;
  p.q = 0.5;
  p.p_star = {0.3, 0.7};
  p.structural = StructuralParams(1.0, 2.0, 0.1, 0.2);
  p.mode = mode;
  p.jitter = mode == Mode::continuous ? kDefaultJitter : 0.0;
  return p;
}

}  // namespace

DGPSpec config_c1(Mode mode) {
  auto p = canonical(mode);
  p.m1 = {0.0, 0.0};
  p.V = 0.0;
  p.W = 0.0;
  return build_spec(p);
}

DGPSpec config_c1_endog(Mode mode) {
  auto p = canonical(mode);
  p.m1 = {0.5, 0.5};
  p.V = 2.0;
  p.W = 0.5;
  return build_spec(p);
}

DGPSpec config_null(Mode mode) {
  auto p = canonical(mode);
  p.structural = StructuralParams(1.0, 0.0, 0.1, 0.2);
  p.m1 = {0.5, 0.5};
  p.V = 2.0;
  p.W = 0.5;
  return build_spec(p);
}

}  // namespace binmis
