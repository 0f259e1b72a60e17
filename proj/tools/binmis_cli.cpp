#include <CLI11.hpp>
#include <iostream>

#include "binmis/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bounds and point estimates for a mis-classified binary endogenous regressor"};
  app.require_subcommand(1, 1);

  binmis::RunConfig cfg;
  int cell = -1;
  double grid_step = 0.0, mean_tol = 0.0, theta1_tol = 0.0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "Input sample (CSV with header y,t,z[,cell])");
    sub->add_option("--output", cfg.output, "Output file (stdout when omitted)");
    sub->add_option("--mask", cfg.mask, "Grid mask file (default <output>.mask.csv)");
    sub->add_option("--grid-step", grid_step, "Grid step h in (0, 0.1]");
    sub->add_option("--mean-tol", mean_tol, "Tolerance for the equal-means case split");
    sub->add_option("--theta1-tol", theta1_tol, "Zero tolerance for theta1");
    sub->add_option("--seed", cfg.seed, "PRNG seed");
    sub->add_option("--n", cfg.n, "Sample size for simulate");
    sub->add_option("--dgp-config", cfg.dgp_config, "DGP configuration file");
    sub->add_option("--cell", cell, "Covariate cell to analyse");
    sub->add_option("--one-sided", cfg.one_sided, "One-sided mis-classification: a0 (alpha0=0) or a1 (alpha1=0)")
        ->check(CLI::IsMember({"a0", "a1"}));
    sub->add_option("--mode", cfg.mode, "Error mode: discrete or continuous")
        ->check(CLI::IsMember({"discrete", "continuous"}));
  };
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Draw a sample from a DGP configuration"},
      {"bounds", "First-order interval and sharp identified set on a grid"},
      {"estimate", "Closed-form point estimate"},
      {"gmm", "Moment-system estimates with standard errors"},
      {"verify", "Check a DGP configuration against the model assumptions"},
      {"oracle", "Cross-check the sharp set against the LP oracle"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << "error_code = usage\n";
    return code == 0 ? 0 : 2;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  if (sub->count("--cell")) cfg.cell = cell;
  if (sub->count("--grid-step")) cfg.grid_step = grid_step;
  if (sub->count("--mean-tol")) cfg.mean_tol = mean_tol;
  if (sub->count("--theta1-tol")) cfg.theta1_tol = theta1_tol;
  return binmis::run(cfg, std::cout, std::cerr);
}
