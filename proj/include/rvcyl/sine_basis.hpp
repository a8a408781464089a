#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "rvcyl/grid.hpp"

namespace rvcyl {

/// v_n(x) = sqrt(2) sin(n pi x), the Dirichlet eigenbasis of L^2([0,1]).
inline double sine_mode(std::size_t n, double x) noexcept {
  return std::numbers::sqrt2 * std::sin(static_cast<double>(n) * std::numbers::pi * x);
}

/// Dirichlet eigenvalue n^2 pi^2 of -d^2/dx^2 on [0,1].
inline double dirichlet_eigenvalue(std::size_t n) noexcept {
  const double k = static_cast<double>(n) * std::numbers::pi;
  return k * k;
}

/// Tabulated sine modes on a SpaceGrid, with exact zeros wherever n*i is a
/// multiple of P (in particular at both endpoints).
class SineTable {
 public:
  SineTable(const SpaceGrid& grid, std::size_t modes)
      : grid_(grid), modes_(modes), values_(modes * grid.size()) {
    const std::size_t p = grid.points();
    for (std::size_t n = 1; n <= modes; ++n) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::size_t r = (n * i) % (2 * p);
        double v = 0.0;
        if (r % p != 0) v = std::numbers::sqrt2 * std::sin(std::numbers::pi * static_cast<double>(r) / static_cast<double>(p));
        values_[(n - 1) * grid.size() + i] = v;
      }
    }
  }

  [[nodiscard]] const SpaceGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] std::size_t modes() const noexcept { return modes_; }

  /// Mode n (1-based) sampled at every grid node.
  [[nodiscard]] std::span<const double> mode(std::size_t n) const noexcept {
    return {values_.data() + (n - 1) * grid_.size(), grid_.size()};
  }

  /// Trapezoidal L^2 projection <field, v_n> for n = 1..modes. The endpoint
  /// weights drop out because every mode vanishes there.
  void project(std::span<const double> field, std::span<double> coeffs) const noexcept {
    const double w = grid_.dx();
    const std::size_t inner = grid_.points();
    for (std::size_t n = 1; n <= modes_; ++n) {
      const double* v = values_.data() + (n - 1) * grid_.size();
      double acc = 0.0;
      for (std::size_t i = 1; i < inner; ++i) acc += field[i] * v[i];
      coeffs[n - 1] = w * acc;
    }
  }

  /// field(x_i) = sum_n coeffs[n-1] v_n(x_i).
  void synthesize(std::span<const double> coeffs, std::span<double> field) const noexcept {
    for (std::size_t i = 0; i < grid_.size(); ++i) field[i] = 0.0;
    for (std::size_t n = 1; n <= modes_ && n <= coeffs.size(); ++n) {
      const double c = coeffs[n - 1];
      if (c == 0.0) continue;
      const double* v = values_.data() + (n - 1) * grid_.size();
      for (std::size_t i = 0; i < grid_.size(); ++i) field[i] += c * v[i];
    }
  }

 private:
  SpaceGrid grid_;
  std::size_t modes_;
  std::vector<double> values_;
};

}  // namespace rvcyl
