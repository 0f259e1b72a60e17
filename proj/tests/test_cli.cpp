#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "binmis/cli.hpp"
#include "binmis/error.hpp"

using namespace binmis;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("binmis_cli_" + std::to_string(::getpid()));
  ScratchDir() { fs::create_directories(path); }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const fs::path& scratch() {
  static const ScratchDir dir;
  return dir.path;
}

std::string config(const char* name) { return std::string(BINMIS_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run_config(const RunConfig& cfg) {
  std::ostringstream out, err;
  const int status = run(cfg, out, err);
  return {status, out.str(), err.str()};
}

// "key = value" lines, metadata excluded.
std::map<std::string, std::string> report_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

std::size_t data_rows(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t rows = 0;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

fs::path simulated(const char* cfg_name, std::size_t n, std::uint64_t seed) {
  const fs::path path = scratch() / (std::string(cfg_name) + "_" + std::to_string(n) + "_" + std::to_string(seed) + ".csv");
  if (fs::exists(path)) return path;
  RunConfig cfg;
  cfg.subcommand = "simulate";
  cfg.dgp_config = config(cfg_name);
  cfg.n = n;
  cfg.seed = seed;
  cfg.output = path.string();
  REQUIRE(run_config(cfg).status == 0);
  return path;
}

int shell(const std::string& args) {
  const std::string cmd = std::string(BINMIS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("simulate writes a sample with metadata") {
  const fs::path path = simulated("c1.dgp", 2000, 5);
  const std::string text = slurp(path);
  CHECK(text.rfind("# format = binmis-sample/1\n", 0) == 0);
  CHECK(text.find("# seed = 5\n") != std::string::npos);
  CHECK(text.find("# prng = ") != std::string::npos);
  CHECK(text.find("y,t,z,cell\n") != std::string::npos);
  CHECK(data_rows(text) == 2000);
}

TEST_CASE("bounds on a C1 sample") {
  const fs::path sample = simulated("c1.dgp", 200000, 1);
  RunConfig cfg;
  cfg.subcommand = "bounds";
  cfg.input = sample.string();
  cfg.output = (scratch() / "bounds.txt").string();
  const Outcome o = run_config(cfg);
  REQUIRE(o.status == 0);
  const std::string report = slurp(cfg.output);
  CHECK(report.find("# format = binmis-report/1") != std::string::npos);
  CHECK(report.find("# grid_step = default") != std::string::npos);
  auto kv = report_values(report);
  // Population interval is [0.8, 2/0.7].
  CHECK(std::stod(kv["first_order_lo"]) == doctest::Approx(0.8).epsilon(0.03));
  CHECK(std::stod(kv["first_order_hi"]) == doctest::Approx(2.0 / 0.7).epsilon(0.03));
  CHECK(std::stod(kv["sharp_beta_lo"]) >= std::stod(kv["first_order_lo"]) - 1e-9);
  CHECK(std::stod(kv["sharp_beta_hi"]) <= std::stod(kv["first_order_hi"]) + 1e-9);

  const std::string mask = slurp(cfg.output + ".mask.csv");
  CHECK(mask.rfind("# format = binmis-mask/1\n", 0) == 0);
  CHECK(mask.find("alpha0,alpha1,feasible\n") != std::string::npos);
  CHECK(data_rows(mask) == std::stoul(kv["grid_points"]));
  CHECK(kv["mask"] == cfg.output + ".mask.csv");

  // Explicit mask path and grid step.
  cfg.mask = (scratch() / "custom_mask.csv").string();
  cfg.grid_step = 0.05;
  REQUIRE(run_config(cfg).status == 0);
  kv = report_values(slurp(cfg.output));
  CHECK(data_rows(slurp(cfg.mask)) == std::stoul(kv["grid_points"]));
  CHECK(std::stod(kv["grid_step"]) == 0.05);
}

TEST_CASE("estimate on a beta = 0 sample") {
  const fs::path sample = simulated("null.dgp", 100000, 2);
  RunConfig cfg;
  cfg.subcommand = "estimate";
  cfg.input = sample.string();
  const Outcome o = run_config(cfg);
  REQUIRE(o.status == 0);
  const auto kv = report_values(o.out);
  CHECK(kv.at("branch") == "beta_zero");
  CHECK(kv.at("beta") == "0");
  CHECK(kv.at("alpha0") == "unidentified");
  CHECK(kv.at("weak_identification") == "true");
}

TEST_CASE("estimate and gmm on a C1-endog sample") {
  const fs::path sample = simulated("c1_endog.dgp", 200000, 3);
  RunConfig cfg;
  cfg.subcommand = "estimate";
  cfg.input = sample.string();
  Outcome o = run_config(cfg);
  REQUIRE(o.status == 0);
  auto kv = report_values(o.out);
  CHECK(kv.at("branch") == "full");
  CHECK(std::stod(kv.at("beta")) == doctest::Approx(2.0).epsilon(0.05));

  cfg.one_sided = "a0";
  o = run_config(cfg);
  REQUIRE(o.status == 0);
  CHECK(report_values(o.out).at("alpha0") == "0");

  cfg.subcommand = "gmm";
  cfg.one_sided.clear();
  o = run_config(cfg);
  REQUIRE(o.status == 0);
  kv = report_values(o.out);
  CHECK(kv.count("cell0.beta_se") == 1);
  CHECK(std::stod(kv.at("cell0.beta_se")) > 0.0);
  CHECK(kv.count("cell0.cov_row6") == 1);
}

TEST_CASE("verify reports violations as warnings") {
  RunConfig cfg;
  cfg.subcommand = "verify";
  cfg.dgp_config = config("c1_endog.dgp");
  Outcome o = run_config(cfg);
  REQUIRE(o.status == 0);
  auto kv = report_values(o.out);
  CHECK(kv.at("status") == "ok");
  CHECK(std::stod(kv.at("endogeneity")) == doctest::Approx(0.5));
  CHECK(kv.at("z_invariant_latent_means") == "false");

  const fs::path broken = scratch() / "broken.dgp";
  write_file(broken, slurp(config("c1_endog.dgp")) + "D_11.points = -3, 0, 3\n");
  cfg.dgp_config = broken.string();
  o = run_config(cfg);
  CHECK(o.status == 0);
  kv = report_values(o.out);
  CHECK(kv.at("status") == "violated");
  CHECK(kv.at("warning").find("mean_independence") != std::string::npos);
  CHECK(o.err.find("warning: ") != std::string::npos);
}

TEST_CASE("oracle agrees off the boundary") {
  RunConfig cfg;
  cfg.subcommand = "oracle";
  cfg.dgp_config = config("c1_endog.dgp");
  const Outcome o = run_config(cfg);
  REQUIRE(o.status == 0);
  const auto kv = report_values(o.out);
  CHECK(kv.at("disagree_interior") == "0");
  CHECK(kv.at("lp_truth_feasible") == "true");
  CHECK(kv.at("grid_points") == "441");
}

TEST_CASE("exit codes") {
  RunConfig cfg;
  cfg.subcommand = "bounds";
  cfg.input = (scratch() / "missing.csv").string();
  Outcome o = run_config(cfg);
  CHECK(o.status == 2);
  CHECK(o.err.find("error_code = file_not_found") != std::string::npos);

  const fs::path bad = scratch() / "bad.csv";
  write_file(bad, "y,t,z\n1.5,2,0\n");
  cfg.input = bad.string();
  o = run_config(cfg);
  CHECK(o.status == 2);
  CHECK(o.err.find("t not binary at line 2") != std::string::npos);

  // Same first stage in both instrument arms.
  const fs::path flat = scratch() / "flat.csv";
  write_file(flat, "y,t,z\n0,0,0\n1,1,0\n0,0,1\n2,1,1\n");
  cfg.input = flat.string();
  o = run_config(cfg);
  CHECK(o.status == 3);
  CHECK(o.err.find("error_code = no_first_stage") != std::string::npos);

  // Near-bound variance with extreme skew cannot be matched to working precision.
  const fs::path skew = scratch() / "skew.dgp";
  write_file(skew, "format = binmis-dgp/1\nm1_0 = 0.5\nm1_1 = 0.5\nV = 1.5\nW = 1e6\n");
  RunConfig v;
  v.subcommand = "verify";
  v.dgp_config = skew.string();
  o = run_config(v);
  CHECK(o.status == 4);
  CHECK(o.err.find("error_code = spec_invariant") != std::string::npos);

  RunConfig step = cfg;
  step.grid_step = 0.2;
  CHECK(run_config(step).status == 2);
  RunConfig unknown;
  unknown.subcommand = "frobnicate";
  CHECK(run_config(unknown).status == 2);
  CHECK(exit_status(ErrorKind::invariant) == 4);
}

TEST_CASE("multi-cell samples require --cell") {
  const fs::path path = scratch() / "cells.csv";
  std::string text = "y,t,z,cell\n";
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 40; ++i)
      text += std::to_string(i % 5) + "," + std::to_string((i * 7 + i / 4) % 3 == 0 ? 1 - i % 2 : i % 2) + "," +
              std::to_string(i % 2) + "," + std::to_string(c) + "\n";
  write_file(path, text);
  RunConfig cfg;
  cfg.subcommand = "bounds";
  cfg.input = path.string();
  Outcome o = run_config(cfg);
  CHECK(o.status == 2);
  CHECK(o.err.find("error_code = cell_required") != std::string::npos);
  cfg.cell = 7;
  o = run_config(cfg);
  CHECK(o.err.find("error_code = unknown_cell") != std::string::npos);
}

TEST_CASE("output is byte-identical across runs") {
  std::string first[3];
  for (int rep = 0; rep < 2; ++rep) {
    RunConfig sim;
    sim.subcommand = "simulate";
    sim.dgp_config = config("c1_endog.dgp");
    sim.mode = "continuous";
    sim.n = 5000;
    sim.seed = 9;
    sim.output = (scratch() / "det.csv").string();
    REQUIRE(run_config(sim).status == 0);
    RunConfig b;
    b.subcommand = "bounds";
    b.input = sim.output;
    b.output = (scratch() / "det.txt").string();
    REQUIRE(run_config(b).status == 0);
    const std::string now[3] = {slurp(sim.output), slurp(b.output), slurp(b.output + ".mask.csv")};
    for (int i = 0; i < 3; ++i) {
      if (rep == 0)
        first[i] = now[i];
      else
        CHECK(now[i] == first[i]);
    }
  }
}

TEST_CASE("binary entry point") {
  const fs::path sample = simulated("c1.dgp", 2000, 5);
  CHECK(shell("--help") == 0);
  CHECK(shell("") == 2);
  CHECK(shell("bounds --grid-step oops") == 2);
  CHECK(shell("estimate --one-sided a2 --input " + sample.string()) == 2);
  CHECK(shell("verify --dgp-config " + config("c1.dgp")) == 0);
  CHECK(shell("bounds --input " + sample.string() + " --output " + (scratch() / "bin.txt").string()) == 0);
  CHECK(fs::exists(scratch() / "bin.txt.mask.csv"));
  const fs::path flat = scratch() / "flat_bin.csv";
  write_file(flat, "y,t,z\n0,0,0\n1,1,0\n0,0,1\n2,1,1\n");
  CHECK(shell("bounds --input " + flat.string()) == 3);
}
