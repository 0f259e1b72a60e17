#include "binmis/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "binmis/error.hpp"

namespace binmis {

Sample::Sample(std::vector<Observation> rows) : rows_(std::move(rows)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& o = rows_[i];
    if (o.t != 0 && o.t != 1)
      throw Error(ErrorKind::input, "non_binary", "t not binary at row " + std::to_string(i));
    if (o.z != 0 && o.z != 1)
      throw Error(ErrorKind::input, "non_binary", "z not binary at row " + std::to_string(i));
    if (!std::isfinite(o.y))
      throw Error(ErrorKind::input, "non_finite", "y not finite at row " + std::to_string(i));
    if (o.cell < 0)
      throw Error(ErrorKind::input, "bad_cell", "negative cell id at row " + std::to_string(i));
  }
}

std::vector<int> Sample::cells() const {
  std::set<int> ids;
  for (const auto& o : rows_) ids.insert(o.cell);
  return {ids.begin(), ids.end()};
}

ByTreatmentInstrument<std::size_t> Sample::counts(int cell) const {
  ByTreatmentInstrument<std::size_t> n{};
  for (const auto& o : rows_)
    if (o.cell == cell) ++n[o.t][o.z];
  return n;
}

StructuralParams::StructuralParams(double c, double beta, double alpha0, double alpha1)
    : c_(c), beta_(beta), alpha0_(alpha0), alpha1_(alpha1) {
  if (!std::isfinite(c) || !std::isfinite(beta))
    throw Error(ErrorKind::input, "invalid_params", "c and beta must be finite");
  if (!(alpha0 >= 0.0 && alpha0 < 1.0) || !(alpha1 >= 0.0 && alpha1 < 1.0))
    throw Error(ErrorKind::input, "invalid_params", "mis-classification rates must lie in [0,1)");
  if (!(alpha0 + alpha1 < 1.0))
    throw Error(ErrorKind::input, "invalid_params", "alpha0 + alpha1 must be < 1");
}

std::vector<std::string> CellValidity::flags() const {
  std::vector<std::string> out;
  if (instrument_degenerate) out.emplace_back("instrument degenerate");
  if (no_first_stage) out.emplace_back("no first stage");
  if (empty_subcell) out.emplace_back("empty sub-cell");
  return out;
}

bool ValidityReport::ok() const noexcept {
  return std::all_of(cells.begin(), cells.end(), [](const CellValidity& c) { return c.ok(); });
}

const CellValidity& ValidityReport::at(int cell) const {
  for (const auto& c : cells)
    if (c.cell == cell) return c;
  throw Error(ErrorKind::input, "unknown_cell", "no such cell: " + std::to_string(cell));
}

ValidityReport validate_sample(const Sample& sample) {
  ValidityReport report;
  for (int cell : sample.cells()) {
    CellValidity v;
    v.cell = cell;
    v.counts = sample.counts(cell);
    const std::size_t nz0 = v.counts[0][0] + v.counts[1][0];
    const std::size_t nz1 = v.counts[0][1] + v.counts[1][1];
    v.n = nz0 + nz1;
    v.q_hat = static_cast<double>(nz1) / static_cast<double>(v.n);
    v.instrument_degenerate = nz0 == 0 || nz1 == 0;
    for (int t = 0; t < 2; ++t)
      for (int k = 0; k < 2; ++k)
        if (v.counts[t][k] == 0) v.empty_subcell = true;
    if (!v.instrument_degenerate) {
      v.p_hat[0] = static_cast<double>(v.counts[1][0]) / static_cast<double>(nz0);
      v.p_hat[1] = static_cast<double>(v.counts[1][1]) / static_cast<double>(nz1);
      v.first_stage_diff = v.p_hat[1] - v.p_hat[0];
      v.first_stage_se = std::sqrt(v.p_hat[0] * (1.0 - v.p_hat[0]) / static_cast<double>(nz0) +
                                   v.p_hat[1] * (1.0 - v.p_hat[1]) / static_cast<double>(nz1));
      // Exact comparison of the two fractions via integer cross-multiplication.
      v.no_first_stage = v.counts[1][1] * nz0 == v.counts[1][0] * nz1;
    }
    report.cells.push_back(v);
  }
  return report;
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

}  // namespace binmis
