#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvcyl/error.hpp"
#include "rvcyl/regularization.hpp"
#include "rvcyl/spde.hpp"
#include "rvcyl/stochastic_paths.hpp"

namespace rvcyl::io {

/// Shortest round-trippable text for a double: 17 significant digits, '.'
/// decimal separator regardless of locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 40> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  std::string s(buf.data(), static_cast<std::size_t>(n));
  for (char& c : s)
    if (c == ',') c = '.';
  return s;
}

/// Minimal CSV emitter: header row first, comma-separated, no quoting (all
/// fields written by this library are numbers or identifiers).
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size()) {
    write_row_strings(header);
  }

  void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }

  void row(std::span<const double> values) {
    require_width(values.size());
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (c) out_ << ',';
      out_ << format_number(values[c]);
    }
    out_ << '\n';
  }

  /// Mixed row; each cell already formatted.
  void row_strings(const std::vector<std::string>& cells) {
    require_width(cells.size());
    write_row_strings(cells);
  }

 private:
  void require_width(std::size_t n) const {
    detail::require(n == columns_, Errc::dimension,
                    "csv row has " + std::to_string(n) + " cells, header has " + std::to_string(columns_));
  }

  void write_row_strings(const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out_ << ',';
      out_ << cells[c];
    }
    out_ << '\n';
  }

  std::ostream& out_;
  std::size_t columns_;
};

inline void write_path_csv(std::ostream& out, const SamplePath& path) {
  CsvWriter csv(out, {"t", "value"});
  for (std::size_t k = 0; k < path.grid.size(); ++k) csv.row({path.grid.node(k), path.values[k]});
}

/// Columns: t, one column per ladder rung, then the extrapolated limit.
inline void write_regularized_csv(std::ostream& out, const TimeGrid& grid, const RegularizedIntegralResult& r) {
  std::vector<std::string> header{"t"};
  for (double e : r.epsilons) header.push_back("eps_" + format_number(e));
  header.push_back("limit");
  CsvWriter csv(out, header);
  std::vector<double> cells(header.size());
  for (std::size_t k = 0; k < r.limit.size(); ++k) {
    cells[0] = grid.node(k);
    for (std::size_t l = 0; l < r.curves.size(); ++l) cells[l + 1] = r.curves[l][k];
    cells.back() = r.limit[k];
    csv.row(cells);
  }
}

inline void write_field_csv(std::ostream& out, const FieldPath& u) {
  CsvWriter csv(out, {"t", "x", "value"});
  for (std::size_t k = 0; k < u.time.size(); ++k)
    for (std::size_t i = 0; i < u.space.size(); ++i) csv.row({u.time.node(k), u.space.node(i), u.at(k, i)});
}

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  rvcyl::detail::require(static_cast<bool>(in), Errc::dimension, "truncated binary field dump");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Binary snapshot: u64 N, u64 P, f64 T, then (N+1)*(P+1) f64 values in
/// row-major (time, space) order; every field little-endian.
inline void write_field_binary(std::ostream& out, const FieldPath& u) {
  detail::put_u64(out, u.time.steps());
  detail::put_u64(out, u.space.points());
  detail::put_u64(out, std::bit_cast<std::uint64_t>(u.time.horizon()));
  for (double v : u.values) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline FieldPath read_field_binary(std::istream& in) {
  const auto steps = detail::get_u64(in);
  const auto points = detail::get_u64(in);
  const double horizon = std::bit_cast<double>(detail::get_u64(in));
  FieldPath u{TimeGrid(horizon, steps), SpaceGrid(points), {}, 0, {}, "binary"};
  u.values.resize(u.time.size() * u.space.size());
  for (double& v : u.values) v = std::bit_cast<double>(detail::get_u64(in));
  return u;
}

inline std::ofstream open_output(const std::filesystem::path& file, bool binary = false) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  rvcyl::detail::require(static_cast<bool>(out), Errc::config, "cannot open " + file.string() + " for writing");
  return out;
}

}  // namespace rvcyl::io
