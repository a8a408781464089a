#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "rvcyl/io.hpp"

namespace rvcyl::harness {

inline constexpr double no_threshold = std::numeric_limits<double>::quiet_NaN();

struct ReportRow {
  std::string quantity;
  double estimate = 0.0;
  double std_error = 0.0;
  double tolerance = no_threshold;  // NaN: recorded for traceability, not a check
  bool pass = false;
};

struct ExperimentReport {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::vector<std::string> errors;     // module errors turned into failed rows
  std::vector<std::string> artifacts;  // files written next to report.csv
  double wall_seconds = 0.0;           // stdout only; never written to CSV
  std::filesystem::path output_dir;

  [[nodiscard]] bool pass() const noexcept {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return !rows.empty();
  }

  [[nodiscard]] std::size_t failed_rows() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.pass ? 0 : 1;
    return n;
  }

  [[nodiscard]] const ReportRow* find(const std::string& quantity) const noexcept {
    for (const auto& r : rows)
      if (r.quantity == quantity) return &r;
    return nullptr;
  }
};

/// Columns: config_hash, seed, row_id, quantity, estimate, std_error, tolerance, pass.
inline void write_report_csv(std::ostream& out, const ExperimentReport& rep) {
  io::CsvWriter csv(out, {"config_hash", "seed", "row_id", "quantity", "estimate", "std_error", "tolerance", "pass"});
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    csv.row_strings({rep.config_hash, std::to_string(rep.seed), std::to_string(i + 1), r.quantity,
                     io::format_number(r.estimate), io::format_number(r.std_error), io::format_number(r.tolerance),
                     r.pass ? "1" : "0"});
  }
}

}  // namespace rvcyl::harness
