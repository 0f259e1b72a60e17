#include "binmis/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include "binmis/dgp.hpp"
#include "binmis/error.hpp"
#include "binmis/gmm.hpp"
#include "binmis/io.hpp"
#include "binmis/moments.hpp"
#include "binmis/oracle.hpp"
#include "binmis/partial_id.hpp"
#include "binmis/point_id.hpp"

namespace binmis {

void RunConfig::validate() const {
  if (grid_step && !(*grid_step > 0.0 && *grid_step <= 0.1))
    throw Error(ErrorKind::input, "bad_grid", "--grid-step must lie in (0, 0.1]");
  if (mean_tol && !(*mean_tol > 0.0)) throw Error(ErrorKind::input, "bad_tolerance", "--mean-tol must be > 0");
  if (theta1_tol && !(*theta1_tol > 0.0)) throw Error(ErrorKind::input, "bad_tolerance", "--theta1-tol must be > 0");
  if (cell && *cell < 0) throw Error(ErrorKind::input, "bad_cell", "--cell must be >= 0");
  if (!one_sided.empty() && one_sided != "a0" && one_sided != "a1")
    throw Error(ErrorKind::input, "bad_one_sided", "--one-sided must be a0 or a1");
  if (!mode.empty()) parse_mode(mode);
}

namespace {

// Ordered "key = value" lines.
class Report {
 public:
  void add(const std::string& key, const std::string& value) { lines_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_number(value)); }
  void add_int(const std::string& key, long long value) { add(key, std::to_string(value)); }
  void add_bool(const std::string& key, bool value) { add(key, value ? "true" : "false"); }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : lines_) os << k << " = " << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) {
    writer(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorKind::input, "cannot_write", "cannot write '" + path + "'");
  writer(file);
  if (!file) throw Error(ErrorKind::input, "cannot_write", "write to '" + path + "' failed");
}

Metadata base_metadata(const RunConfig& cfg) {
  Metadata meta;
  meta.set("subcommand", cfg.subcommand);
  meta.set("prng", std::string(Xoshiro256::name));
  meta.set("seed", std::to_string(cfg.seed));
  meta.set("grid_step", cfg.grid_step ? format_number(*cfg.grid_step) : std::string("default"));
  meta.set("mean_tol", cfg.mean_tol ? format_number(*cfg.mean_tol) : std::string("default"));
  meta.set("theta1_tol", cfg.theta1_tol ? format_number(*cfg.theta1_tol) : std::string("default"));
  if (!cfg.input.empty()) meta.set("input", cfg.input);
  if (!cfg.dgp_config.empty()) meta.set("dgp_config", cfg.dgp_config);
  return meta;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorKind::input, "missing_flag", std::string("missing ") + flag);
}

int choose_cell(const Sample& sample, const RunConfig& cfg) {
  const auto cells = sample.cells();
  if (cells.empty()) throw Error(ErrorKind::input, "empty_sample", "sample has no rows");
  if (cfg.cell) {
    if (std::find(cells.begin(), cells.end(), *cfg.cell) == cells.end())
      throw Error(ErrorKind::input, "unknown_cell", "no such cell: " + std::to_string(*cfg.cell));
    return *cfg.cell;
  }
  if (cells.size() > 1)
    throw Error(ErrorKind::input, "cell_required", "sample has " + std::to_string(cells.size()) +
                                                       " cells; pass --cell");
  return cells.front();
}

void require_valid_cell(const Sample& sample, int cell) {
  const auto report = validate_sample(sample);
  const auto& v = report.at(cell);
  if (v.instrument_degenerate)
    throw Error(ErrorKind::identification, "instrument_degenerate", "instrument degenerate in cell " + std::to_string(cell));
  if (v.no_first_stage)
    throw Error(ErrorKind::identification, "no_first_stage", "no first stage in cell " + std::to_string(cell));
  if (v.empty_subcell)
    throw Error(ErrorKind::identification, "empty_subcell", "empty (T,z) sub-cell in cell " + std::to_string(cell));
}

DgpConfig load_config(const RunConfig& cfg) {
  require(cfg.dgp_config, "--dgp-config");
  DgpConfig dgp = read_dgp_config(cfg.dgp_config);
  if (!cfg.mode.empty()) {
    dgp.params.mode = parse_mode(cfg.mode);
    if (dgp.params.mode == Mode::continuous && dgp.params.jitter == 0.0) dgp.params.jitter = kDefaultJitter;
  }
  return dgp;
}

std::string mask_path(const RunConfig& cfg) {
  if (!cfg.mask.empty()) return cfg.mask;
  if (!cfg.output.empty()) return cfg.output + ".mask.csv";
  return {};
}

void write_mask(const std::string& path, const std::vector<GridPoint>& points, const Metadata& meta) {
  emit(path, std::cout, [&](std::ostream& os) {
    meta.write(os, kMaskFormat);
    os << "alpha0,alpha1,feasible\n";
    for (const auto& g : points)
      os << format_number(g.alpha0) << ',' << format_number(g.alpha1) << ',' << (g.feasible ? 1 : 0) << '\n';
  });
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const DgpConfig dgp = load_config(cfg);
  const DGPSpec spec = make_spec(dgp);
  const Sample sample = simulate(spec, cfg.n, cfg.seed);
  Metadata meta = base_metadata(cfg);
  meta.set("n", std::to_string(cfg.n));
  meta.set("mode", std::string(to_string(spec.mode)));
  meta.set("jitter", spec.jitter);
  emit(cfg.output, out, [&](std::ostream& os) { write_sample(os, sample, meta); });
  if (!cfg.output.empty()) {
    Report r;
    r.add("output", cfg.output);
    r.add_int("n", static_cast<long long>(sample.size()));
    r.add_int("cell", spec.cell);
    r.add("seed", std::to_string(cfg.seed));
    r.write(out);
  }
  return 0;
}

int cmd_bounds(const RunConfig& cfg, std::ostream& out) {
  require(cfg.input, "--input");
  const Sample sample = ingest(cfg.input);
  const int cell = choose_cell(sample, cfg);
  require_valid_cell(sample, cell);
  const CellData data = cell_data(sample, cell);
  const auto& m = data.moments;
  const Interval first = beta_interval_first_order(m);
  const double h = cfg.grid_step.value_or(kDefaultGridStep);
  std::optional<std::array<double, 2>> tol;
  if (cfg.mean_tol) tol = std::array<double, 2>{*cfg.mean_tol, *cfg.mean_tol};
  const SharpSet set = sharp_set_grid(data, AlphaGrid::by_step(alpha_rectangle(m), h), tol);

  Metadata meta = base_metadata(cfg);
  meta.set("cell", std::to_string(cell));
  const std::string mpath = mask_path(cfg);
  Report r;
  r.add_int("cell", cell);
  r.add("n", m.n);
  r.add("q", m.q);
  r.add("p0", m.p[0]);
  r.add("p1", m.p[1]);
  r.add("cov_t_z", m.pi);
  r.add("cov_y_z", m.eta[0]);
  r.add("rf_estimand", m.eta[0] / (m.q * (1.0 - m.q)));
  r.add("iv_estimand", m.eta[0] / m.pi);
  r.add("first_order_lo", first.lo);
  r.add("first_order_hi", first.hi);
  r.add("alpha0_max", set.rect.alpha0_max);
  r.add("alpha1_max", set.rect.alpha1_max);
  r.add("case", std::string(to_string(set.label)));
  r.add_bool("restricts_k0", set.restricts[0]);
  r.add_bool("restricts_k1", set.restricts[1]);
  r.add("mean_tol_k0", set.mean_tol[0]);
  r.add("mean_tol_k1", set.mean_tol[1]);
  r.add("grid_step", h);
  r.add_int("grid_points", static_cast<long long>(set.points.size()));
  r.add_int("feasible_points", static_cast<long long>(set.feasible_count()));
  r.add("sharp_beta_lo", set.beta.lo);
  r.add("sharp_beta_hi", set.beta.hi);
  r.add("mask", mpath.empty() ? std::string("not written") : mpath);
  emit(cfg.output, out, [&](std::ostream& os) {
    meta.write(os, kReportFormat);
    r.write(os);
  });
  if (!mpath.empty()) write_mask(mpath, set.points, meta);
  return 0;
}

void add_estimate(Report& r, const std::string& prefix, const PointEstimate& est, const MomentSet& m) {
  r.add(prefix + "branch", std::string(to_string(est.branch)));
  r.add(prefix + "beta", est.beta);
  r.add(prefix + "alpha0", est.alpha0 ? format_number(*est.alpha0) : std::string("unidentified"));
  r.add(prefix + "alpha1", est.alpha1 ? format_number(*est.alpha1) : std::string("unidentified"));
  if (est.quadratic) {
    r.add(prefix + "A", est.quadratic->A);
    r.add(prefix + "B", est.quadratic->B);
    r.add(prefix + "discriminant", est.quadratic->discriminant);
    r.add(prefix + "root_small", est.quadratic->root_small);
    r.add(prefix + "root_large", est.quadratic->root_large);
  }
  if (est.alpha0 && est.alpha1) {
    r.add(prefix + "alpha_difference", *est.alpha1 - *est.alpha0);
    r.add(prefix + "intercept_derived", intercept(m, est.beta, *est.alpha0, *est.alpha1, 0));
  }
}

GmmOptions gmm_options(const RunConfig& cfg) {
  GmmOptions opt;
  opt.theta1_tol = cfg.theta1_tol;
  return opt;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.input, "--input");
  const Sample sample = ingest(cfg.input);
  const int cell = choose_cell(sample, cfg);
  require_valid_cell(sample, cell);
  const MomentSet m = empirical_moments(sample, cell);
  const GmmResult g = estimate_cell(sample, cell, gmm_options(cfg));

  PointEstimate est;
  if (!cfg.one_sided.empty() && !g.weak) {
    const double tol1 = cfg.theta1_tol.value_or(default_theta1_tolerance(m));
    if (std::abs(g.theta.theta1) <= tol1) {
      est.theta = g.theta;
      est.branch = Branch::beta_zero;
    } else {
      est = one_sided_point_estimate(g.theta.theta1, g.theta.theta2,
                                     cfg.one_sided == "a0" ? OneSided::alpha0_zero : OneSided::alpha1_zero);
      est.theta = g.theta;
    }
  } else if (g.structural) {
    est = *g.structural;
  } else {
    throw Error(ErrorKind::identification, g.structural_error_code, g.structural_error);
  }

  Metadata meta = base_metadata(cfg);
  meta.set("cell", std::to_string(cell));
  meta.set("one_sided", cfg.one_sided.empty() ? std::string("none") : cfg.one_sided);
  Report r;
  r.add_int("cell", cell);
  r.add("n", m.n);
  r.add("theta1", g.theta.theta1);
  r.add("theta2", g.theta.theta2);
  r.add("theta3", g.theta.theta3);
  r.add("theta1_se", g.theta_se(0));
  add_estimate(r, "", est, m);
  r.add_bool("weak_identification", g.weak);
  for (const auto& w : g.warnings) {
    r.add("warning", w);
    err << "warning: " << w << '\n';
  }
  emit(cfg.output, out, [&](std::ostream& os) {
    meta.write(os, kReportFormat);
    r.write(os);
  });
  return 0;
}

int cmd_gmm(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.input, "--input");
  const Sample sample = ingest(cfg.input);
  std::vector<int> cells = cfg.cell ? std::vector<int>{choose_cell(sample, cfg)} : sample.cells();
  Metadata meta = base_metadata(cfg);
  Report r;
  for (int cell : cells) {
    require_valid_cell(sample, cell);
    const MomentSet m = empirical_moments(sample, cell);
    const GmmResult g = estimate_cell(sample, cell, gmm_options(cfg));
    const std::string pre = "cell" + std::to_string(cell) + ".";
    r.add_int(pre + "n", static_cast<long long>(g.n));
    r.add(pre + "theta1", g.theta.theta1);
    r.add(pre + "theta2", g.theta.theta2);
    r.add(pre + "theta3", g.theta.theta3);
    for (int j = 0; j < 3; ++j) r.add(pre + "theta" + std::to_string(j + 1) + "_se", g.theta_se(j));
    for (int j = 0; j < 3; ++j) r.add(pre + "kappa" + std::to_string(j + 1), g.kappa(j));
    for (int j = 0; j < 3; ++j) r.add(pre + "orthogonality" + std::to_string(j + 1), g.orthogonality(j));
    for (int i = 0; i < 6; ++i) {
      std::string row;
      for (int j = 0; j < 6; ++j) row += (j ? ", " : "") + format_number(g.cov(i, j));
      r.add(pre + "cov_row" + std::to_string(i + 1), row);
    }
    if (g.structural) {
      add_estimate(r, pre, *g.structural, m);
    } else {
      r.add(pre + "structural_error", g.structural_error);
      r.add(pre + "structural_error_code", g.structural_error_code);
    }
    if (g.se) {
      r.add(pre + "beta_se", (*g.se)(0));
      r.add(pre + "alpha0_se", (*g.se)(1));
      r.add(pre + "alpha1_se", (*g.se)(2));
    } else {
      r.add(pre + "se", g.se_note);
    }
    r.add_bool(pre + "weak_identification", g.weak);
    for (const auto& w : g.warnings) {
      r.add(pre + "warning", w);
      err << "warning: cell " << cell << ": " << w << '\n';
    }
  }
  emit(cfg.output, out, [&](std::ostream& os) {
    meta.write(os, kReportFormat);
    r.write(os);
  });
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const DgpConfig dgp = load_config(cfg);
  const DGPSpec spec = make_spec(dgp);
  const AssumptionReport a = verify_assumptions(spec);
  Metadata meta = base_metadata(cfg);
  meta.set("mode", std::string(to_string(spec.mode)));
  Report r;
  r.add("mean_independence", a.mean_independence);
  r.add("second_moment", a.second_moment);
  r.add("third_moment", a.third_moment);
  r.add("cell_moments", a.cell_moments);
  r.add("distribution", a.distribution);
  r.add_bool("first_stage", a.first_stage);
  r.add_bool("misclassification_bound", a.misclassification_bound);
  r.add_bool("independent_flips", a.independent_flips);
  r.add("endogeneity", a.endogeneity);
  r.add("max_cell_mean", a.max_cell_mean);
  r.add_bool("z_invariant_latent_means", a.mahajan_condition);
  r.add("max_violation", a.max_violation());
  const bool ok = a.ok();
  r.add("status", ok ? std::string("ok") : std::string("violated"));
  if (!ok) {
    std::string families;
    const auto note = [&](const char* name, bool bad) {
      if (bad) families += (families.empty() ? "" : ", ") + std::string(name);
    };
    const double tol = 1e-12;
    note("mean_independence", a.mean_independence >= tol);
    note("second_moment", a.second_moment >= tol);
    note("third_moment", a.third_moment >= tol);
    note("cell_moments", a.cell_moments >= tol);
    note("distribution", a.distribution >= tol);
    note("first_stage", !a.first_stage);
    note("misclassification_bound", !a.misclassification_bound);
    const std::string msg = "assumption violations: " + families;
    r.add("warning", msg);
    err << "warning: " << msg << '\n';
  }
  emit(cfg.output, out, [&](std::ostream& os) {
    meta.write(os, kReportFormat);
    r.write(os);
  });
  return 0;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  const DgpConfig dgp = load_config(cfg);
  const DGPSpec spec = make_spec(dgp);
  const DiscreteInstance inst = discretize(spec);
  const CellData data = cell_data(inst);
  const AlphaRectangle rect = alpha_rectangle(data.moments);
  const AlphaGrid grid = cfg.grid_step ? AlphaGrid::by_step(rect, *cfg.grid_step) : AlphaGrid::by_count(rect, 21, 21);
  const SharpSet analytic = sharp_set_grid(data, grid);
  const auto lp = bruteforce_sharp_set(inst, grid);
  const auto boundary = near_boundary(grid, lp);

  std::size_t agree = 0, off_boundary = 0, disagree_boundary = 0, disagree_interior = 0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (!boundary[i]) ++off_boundary;
    if (lp[i].feasible == analytic.points[i].feasible)
      ++agree;
    else if (boundary[i])
      ++disagree_boundary;
    else
      ++disagree_interior;
  }
  const GridPoint& nearest = analytic.nearest(inst.alpha0, inst.alpha1);
  Metadata meta = base_metadata(cfg);
  Report r;
  r.add_int("support_points", static_cast<long long>(inst.support.size()));
  r.add("case", std::string(to_string(analytic.label)));
  r.add_int("grid_points", static_cast<long long>(lp.size()));
  r.add_int("off_boundary_points", static_cast<long long>(off_boundary));
  r.add_int("agree", static_cast<long long>(agree));
  r.add_int("disagree_boundary", static_cast<long long>(disagree_boundary));
  r.add_int("disagree_interior", static_cast<long long>(disagree_interior));
  r.add_bool("lp_truth_feasible", lp_feasible_mixture(inst));
  r.add("nearest_alpha0", nearest.alpha0);
  r.add("nearest_alpha1", nearest.alpha1);
  r.add_bool("nearest_feasible", nearest.feasible);
  r.add("sharp_beta_lo", analytic.beta.lo);
  r.add("sharp_beta_hi", analytic.beta.hi);
  const std::string mpath = mask_path(cfg);
  r.add("mask", mpath.empty() ? std::string("not written") : mpath);
  emit(cfg.output, out, [&](std::ostream& os) {
    meta.write(os, kReportFormat);
    r.write(os);
  });
  if (!mpath.empty()) write_mask(mpath, lp, meta);
  if (disagree_interior > 0)
    throw Error(ErrorKind::invariant, "oracle_disagreement",
                std::to_string(disagree_interior) + " grid points off the boundary disagree with the LP oracle");
  return 0;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    const auto& sub = config.subcommand;
    if (sub == "simulate") return cmd_simulate(config, out);
    if (sub == "bounds") return cmd_bounds(config, out);
    if (sub == "estimate") return cmd_estimate(config, out, err);
    if (sub == "gmm") return cmd_gmm(config, out, err);
    if (sub == "verify") return cmd_verify(config, out, err);
    if (sub == "oracle") return cmd_oracle(config, out);
    throw Error(ErrorKind::input, "unknown_subcommand", "unknown subcommand '" + sub + "'");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n' << "error_code = " << e.code() << '\n';
    return exit_status(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n' << "error_code = internal\n";
    return 4;
  }
}

}  // namespace binmis
