#ifndef BINMIS_CLI_HPP
#define BINMIS_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace binmis {

struct RunConfig {
  std::string subcommand;  // simulate | bounds | estimate | gmm | verify | oracle
  std::string input;
  std::string output;      // report (or sample, for simulate); stdout when empty
  std::string mask;        // grid mask path; defaults to <output>.mask.csv
  std::optional<double> grid_step;
  std::optional<double> mean_tol;
  std::optional<double> theta1_tol;
  std::uint64_t seed = 1;
  std::size_t n = 10000;
  std::string dgp_config;
  std::optional<int> cell;
  std::string one_sided;   // "", "a0" (alpha0 = 0) or "a1" (alpha1 = 0)
  std::string mode;        // "", "discrete" or "continuous": overrides the config

  // Throws Error(input) on out-of-range values.
  void validate() const;
};

// Dispatches one subcommand. Returns the process exit status: 0 on success
// (warnings included), 2 input error, 3 identification failure, 4 invariant
// breach. Errors are reported on err with an "error_code = ..." line.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace binmis

#endif  // BINMIS_CLI_HPP
