#ifndef BINMIS_IO_HPP
#define BINMIS_IO_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "binmis/dgp.hpp"
#include "binmis/types.hpp"

namespace binmis {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kSampleFormat = "binmis-sample/1";
constexpr const char* kDgpFormat = "binmis-dgp/1";
constexpr const char* kReportFormat = "binmis-report/1";
constexpr const char* kMaskFormat = "binmis-mask/1";

// %.9g
std::string format_number(double x);

// Ordered key/value pairs written as "# key = value" lines at the top of
// every output file.
struct Metadata {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void write(std::ostream& os, const std::string& format) const;
};

// Comma-separated, header row with y, t, z and an optional cell column.
// Blank lines and lines starting with '#' are skipped.
Sample parse_sample(std::istream& is);
Sample ingest(const std::string& path);

// Rows at %.17g so that a write/ingest roundtrip is exact.
void write_sample(std::ostream& os, const Sample& sample, const Metadata& meta);

// Parsed DGP configuration. "D_tk.points" / "D_tk.probs" override the
// constructed error law of cell (T*=t, z=k) after construction.
struct DgpConfig {
  DGPParams params;
  int cell = 0;
  std::map<std::string, std::array<double, 3>> overrides;
};

DgpConfig parse_dgp_config(std::istream& is);
DgpConfig read_dgp_config(const std::string& path);
void write_dgp_config(std::ostream& os, const DgpConfig& config);

// build_spec plus overrides. Overridden laws are not re-verified.
DGPSpec make_spec(const DgpConfig& config);

}  // namespace binmis

#endif  // BINMIS_IO_HPP
