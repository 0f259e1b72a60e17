#include "binmis/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "binmis/error.hpp"

namespace binmis {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_int(const std::string& text, long& out) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, "file_not_found", "cannot open '" + path + "'");
  return in;
}

}  // namespace

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

void Metadata::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

void Metadata::set(const std::string& key, double value) { set(key, format_number(value)); }

void Metadata::write(std::ostream& os, const std::string& format) const {
  os << "# format = " << format << '\n';
  os << "# generator = binmis " << kVersion << '\n';
  for (const auto& [k, v] : entries) os << "# " << k << " = " << v << '\n';
}

Sample parse_sample(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  int col_y = -1, col_t = -1, col_z = -1, col_cell = -1;
  std::size_t width = 0;
  bool have_header = false;
  std::vector<Observation> rows;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = split(text, ',');
    const std::string at = " at line " + std::to_string(line_no);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const int idx = static_cast<int>(i);
        if (fields[i] == "y") col_y = idx;
        else if (fields[i] == "t") col_t = idx;
        else if (fields[i] == "z") col_z = idx;
        else if (fields[i] == "cell") col_cell = idx;
      }
      if (col_y < 0 || col_t < 0 || col_z < 0) {
        std::string missing = col_y < 0 ? "y" : col_t < 0 ? "t" : "z";
        throw Error(ErrorKind::input, "missing_column", "missing column '" + missing + "' in header" + at);
      }
      width = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != width)
      throw Error(ErrorKind::input, "bad_row", "expected " + std::to_string(width) + " fields, got " +
                                                   std::to_string(fields.size()) + at);
    Observation o;
    if (!parse_double(fields[static_cast<std::size_t>(col_y)], o.y) || !std::isfinite(o.y))
      throw Error(ErrorKind::input, "unparseable_numeric", "unparseable numeric in column y" + at);
    long t = 0, z = 0, cell = 0;
    double tmp = 0.0;
    const auto binary = [&](int col, const char* name, long& out) {
      const auto& f = fields[static_cast<std::size_t>(col)];
      if (!parse_int(f, out)) {
        if (parse_double(f, tmp) && tmp == static_cast<double>(static_cast<long>(tmp)))
          out = static_cast<long>(tmp);
        else if (parse_double(f, tmp))
          throw Error(ErrorKind::input, "non_binary", std::string(name) + " not binary" + at);
        else
          throw Error(ErrorKind::input, "unparseable_numeric", std::string("unparseable numeric in column ") + name + at);
      }
      if (out != 0 && out != 1) throw Error(ErrorKind::input, "non_binary", std::string(name) + " not binary" + at);
    };
    binary(col_t, "t", t);
    binary(col_z, "z", z);
    if (col_cell >= 0) {
      if (!parse_int(fields[static_cast<std::size_t>(col_cell)], cell) || cell < 0)
        throw Error(ErrorKind::input, "bad_cell", "cell must be a non-negative integer" + at);
    }
    o.t = static_cast<int>(t);
    o.z = static_cast<int>(z);
    o.cell = static_cast<int>(cell);
    rows.push_back(o);
  }
  if (!have_header) throw Error(ErrorKind::input, "missing_column", "no header row with columns y,t,z");
  return Sample(std::move(rows));
}

Sample ingest(const std::string& path) {
  auto in = open_input(path);
  return parse_sample(in);
}

void write_sample(std::ostream& os, const Sample& sample, const Metadata& meta) {
  meta.write(os, kSampleFormat);
  os << "y,t,z,cell\n";
  for (const auto& o : sample.rows()) os << format_full(o.y) << ',' << o.t << ',' << o.z << ',' << o.cell << '\n';
}

DgpConfig parse_dgp_config(std::istream& is) {
  DgpConfig cfg;
  const DGPParams defaults;
  double c = defaults.structural.c(), beta = defaults.structural.beta();
  double a0 = defaults.structural.alpha0(), a1 = defaults.structural.alpha1();
  bool jitter_set = false;
  bool format_seen = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::string at = " at line " + std::to_string(line_no);
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::input, "bad_config", "expected 'key = value'" + at);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key == "format") {
      if (value != kDgpFormat)
        throw Error(ErrorKind::input, "bad_format", "unsupported format '" + value + "'" + at);
      format_seen = true;
      continue;
    }
    if (key == "mode") {
      cfg.params.mode = parse_mode(value);
      continue;
    }
    if (key.rfind("D_", 0) == 0) {
      const auto fields = split(value, ',');
      std::array<double, 3> v{};
      if (fields.size() != 3 || !parse_double(fields[0], v[0]) || !parse_double(fields[1], v[1]) ||
          !parse_double(fields[2], v[2]))
        throw Error(ErrorKind::input, "bad_config", key + " needs three comma-separated numbers" + at);
      if (key != "D_00.points" && key != "D_01.points" && key != "D_10.points" && key != "D_11.points" &&
          key != "D_00.probs" && key != "D_01.probs" && key != "D_10.probs" && key != "D_11.probs")
        throw Error(ErrorKind::input, "bad_config", "unknown key '" + key + "'" + at);
      cfg.overrides[key] = v;
      continue;
    }
    double x = 0.0;
    if (!parse_double(value, x))
      throw Error(ErrorKind::input, "unparseable_numeric", "unparseable numeric for '" + key + "'" + at);
    if (key == "q") cfg.params.q = x;
    else if (key == "p_star_0") cfg.params.p_star[0] = x;
    else if (key == "p_star_1") cfg.params.p_star[1] = x;
    else if (key == "c") c = x;
    else if (key == "beta") beta = x;
    else if (key == "alpha0") a0 = x;
    else if (key == "alpha1") a1 = x;
    else if (key == "m1_0") cfg.params.m1[0] = x;
    else if (key == "m1_1") cfg.params.m1[1] = x;
    else if (key == "V") cfg.params.V = x;
    else if (key == "W") cfg.params.W = x;
    else if (key == "jitter") {
      cfg.params.jitter = x;
      jitter_set = true;
    } else if (key == "cell") {
      if (x < 0 || x != static_cast<double>(static_cast<int>(x)))
        throw Error(ErrorKind::input, "bad_cell", "cell must be a non-negative integer" + at);
      cfg.cell = static_cast<int>(x);
    } else {
      throw Error(ErrorKind::input, "bad_config", "unknown key '" + key + "'" + at);
    }
  }
  if (!format_seen) throw Error(ErrorKind::input, "bad_format", "missing 'format = " + std::string(kDgpFormat) + "'");
  cfg.params.structural = StructuralParams(c, beta, a0, a1);
  if (cfg.params.mode == Mode::continuous && !jitter_set) cfg.params.jitter = kDefaultJitter;
  return cfg;
}

DgpConfig read_dgp_config(const std::string& path) {
  auto in = open_input(path);
  return parse_dgp_config(in);
}

void write_dgp_config(std::ostream& os, const DgpConfig& cfg) {
  const auto& p = cfg.params;
  os << "format = " << kDgpFormat << '\n';
  os << "q = " << format_full(p.q) << '\n';
  os << "p_star_0 = " << format_full(p.p_star[0]) << '\n';
  os << "p_star_1 = " << format_full(p.p_star[1]) << '\n';
  os << "c = " << format_full(p.structural.c()) << '\n';
  os << "beta = " << format_full(p.structural.beta()) << '\n';
  os << "alpha0 = " << format_full(p.structural.alpha0()) << '\n';
  os << "alpha1 = " << format_full(p.structural.alpha1()) << '\n';
  os << "m1_0 = " << format_full(p.m1[0]) << '\n';
  os << "m1_1 = " << format_full(p.m1[1]) << '\n';
  os << "V = " << format_full(p.V) << '\n';
  os << "W = " << format_full(p.W) << '\n';
  os << "mode = " << to_string(p.mode) << '\n';
  os << "jitter = " << format_full(p.jitter) << '\n';
  os << "cell = " << cfg.cell << '\n';
  for (const auto& [key, v] : cfg.overrides)
    os << key << " = " << format_full(v[0]) << ", " << format_full(v[1]) << ", " << format_full(v[2]) << '\n';
}

DGPSpec make_spec(const DgpConfig& config) {
  DGPSpec spec = build_spec(config.params);
  spec.cell = config.cell;
  for (const auto& [key, v] : config.overrides) {
    const int s = key[2] - '0';
    const int k = key[3] - '0';
    auto& d = spec.dist[s][k];
    if (key.substr(5) == "points")
      d.points = v;
    else
      d.probs = v;
  }
  return spec;
}

}  // namespace binmis
