#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rvcyl/error.hpp"
#include "rvcyl/grid.hpp"
#include "rvcyl/sine_basis.hpp"
#include "rvcyl/stats.hpp"

namespace rvcyl {

/// Dirichlet heat kernel on [0,1] truncated to M sine modes:
///   G(t,x,y) = 2 sum_{n<=M} sin(n pi x) sin(n pi y) exp(-n^2 pi^2 t).
/// Pointwise evaluation is only trusted for t >= min_time(), where the first
/// discarded mode is damped below 1e-12.
class HeatKernel {
 public:
  static constexpr double truncation_level = 1e-12;

  explicit HeatKernel(std::size_t modes) : modes_(modes) {
    detail::require(modes >= 1, Errc::invalid_parameter, "heat kernel needs at least one mode");
  }

  [[nodiscard]] std::size_t modes() const noexcept { return modes_; }

  [[nodiscard]] double min_time() const noexcept {
    return -std::log(truncation_level) / dirichlet_eigenvalue(modes_);
  }

  [[nodiscard]] bool admissible(double t) const noexcept { return t >= min_time() * (1.0 - 1e-12); }

  void require_admissible(double t) const {
    if (!admissible(t))
      throw Error(Errc::truncation_inadmissible, "t = " + std::to_string(t) + " is below the truncation floor " +
                                                     std::to_string(min_time()) + " for " +
                                                     std::to_string(modes_) + " modes");
  }

 private:
  std::size_t modes_;
};

namespace detail {

inline double kernel_sum(std::size_t modes, double t, double x, double y) noexcept {
  if (x <= 0.0 || x >= 1.0 || y <= 0.0 || y >= 1.0) return 0.0;
  double acc = 0.0;
  for (std::size_t n = 1; n <= modes; ++n) {
    const double k = static_cast<double>(n) * std::numbers::pi;
    acc += std::sin(k * x) * std::sin(k * y) * std::exp(-k * k * t);
  }
  return 2.0 * acc;
}

inline void require_unit_interval(double x, const char* name) {
  require(x >= 0.0 && x <= 1.0, Errc::invalid_parameter, std::string(name) + " must lie in [0, 1]");
}

}  // namespace detail

inline double kernel_eval(const HeatKernel& kernel, double t, double x, double y) {
  kernel.require_admissible(t);
  detail::require_unit_interval(x, "x");
  detail::require_unit_interval(y, "y");
  return detail::kernel_sum(kernel.modes(), t, x, y);
}

/// (e^{t Laplacian} field)(x_i) in spectral space: project onto the first
/// min(M, P-1) sine modes, damp mode n by exp(-n^2 pi^2 t), resynthesize.
/// t = 0 is accepted and returns the projection round trip.
inline std::vector<double> apply_kernel(const HeatKernel& kernel, double t, const SpaceGrid& grid,
                                        std::span<const double> field) {
  detail::require(field.size() == grid.size(), Errc::dimension, "field does not match the space grid");
  if (t != 0.0) kernel.require_admissible(t);
  const std::size_t modes = std::min(kernel.modes(), grid.points() - 1);
  SineTable table(grid, modes);
  std::vector<double> coeffs(modes);
  table.project(field, coeffs);
  for (std::size_t n = 1; n <= modes; ++n) coeffs[n - 1] *= std::exp(-dirichlet_eigenvalue(n) * t);
  std::vector<double> out(grid.size());
  table.synthesize(coeffs, out);
  return out;
}

/// Kernel values G(t, x_a, y_b) for every (working node, quadrature node) pair,
/// row-major in the working node.
inline std::vector<double> kernel_matrix(const HeatKernel& kernel, double t, const SpaceGrid& rows,
                                         const SpaceGrid& cols) {
  kernel.require_admissible(t);
  const std::size_t m = kernel.modes();
  std::vector<double> sx(m * rows.size()), sy(m * cols.size());
  for (std::size_t n = 1; n <= m; ++n) {
    const double k = static_cast<double>(n) * std::numbers::pi;
    const double damp = 2.0 * std::exp(-k * k * t);
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const double x = rows.node(a);
      sx[(n - 1) * rows.size() + a] = (x <= 0.0 || x >= 1.0) ? 0.0 : damp * std::sin(k * x);
    }
    for (std::size_t b = 0; b < cols.size(); ++b) {
      const double y = cols.node(b);
      sy[(n - 1) * cols.size() + b] = (y <= 0.0 || y >= 1.0) ? 0.0 : std::sin(k * y);
    }
  }
  std::vector<double> g(rows.size() * cols.size(), 0.0);
  for (std::size_t n = 0; n < m; ++n) {
    const double* px = sx.data() + n * rows.size();
    const double* py = sy.data() + n * cols.size();
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const double c = px[a];
      if (c == 0.0) continue;
      double* row = g.data() + a * cols.size();
      for (std::size_t b = 0; b < cols.size(); ++b) row[b] += c * py[b];
    }
  }
  return g;
}

struct LpBoundReport {
  double p = 0.0;
  std::vector<double> times;
  std::vector<double> max_integral;  // max_x int_0^1 G(t,x,y)^p dy
  double fitted_slope = 0.0;
  double expected_slope = 0.0;  // (1 - p) / 2
  double constant = 0.0;        // max_t max_integral / t^{(1-p)/2}
  double peak = 0.0;            // largest max_integral over the time list
};

/// Checks int_0^1 G(t,x,y)^p dy <= C_p t^{(1-p)/2} by trapezoidal quadrature on
/// a grid ten times finer than `working`, maximizing over the working nodes.
inline LpBoundReport check_lp_bound(const HeatKernel& kernel, double p, std::span<const double> times,
                                    const SpaceGrid& working = SpaceGrid(64)) {
  detail::require(p == 1.0 || p == 2.0 || p == 3.0, Errc::invalid_parameter, "p must be one of 1, 2, 3");
  detail::require(times.size() >= 2, Errc::invalid_parameter, "need at least two times to fit a slope");
  const SpaceGrid fine(10 * working.points());
  const auto power = static_cast<int>(p);

  LpBoundReport rep;
  rep.p = p;
  rep.expected_slope = 0.5 * (1.0 - p);
  rep.times.assign(times.begin(), times.end());
  for (double t : times) {
    const auto g = kernel_matrix(kernel, t, working, fine);
    double best = -HUGE_VAL;
    for (std::size_t a = 0; a < working.size(); ++a) {
      const double* row = g.data() + a * fine.size();
      double acc = 0.0;
      for (std::size_t b = 1; b + 1 < fine.size(); ++b) acc += std::pow(row[b], power);
      best = std::max(best, acc * fine.dx());
    }
    rep.max_integral.push_back(best);
  }

  std::vector<double> lt, li;
  for (std::size_t i = 0; i < times.size(); ++i) {
    lt.push_back(std::log(times[i]));
    li.push_back(std::log(rep.max_integral[i]));
    rep.constant = std::max(rep.constant, rep.max_integral[i] / std::pow(times[i], rep.expected_slope));
    rep.peak = std::max(rep.peak, rep.max_integral[i]);
  }
  rep.fitted_slope = fit_slope(lt, li);
  return rep;
}

/// max over working nodes (x, y) of |int G(t,x,z) G(s,z,y) dz - G(t+s,x,y)|,
/// with the z-integral taken by the trapezoidal rule on a 10x finer grid.
inline double semigroup_defect(const HeatKernel& kernel, double t, double s, const SpaceGrid& working = SpaceGrid(32)) {
  const SpaceGrid fine(10 * working.points());
  const auto left = kernel_matrix(kernel, t, working, fine);
  const auto right = kernel_matrix(kernel, s, working, fine);
  const auto direct = kernel_matrix(kernel, t + s, working, working);
  double worst = 0.0;
  for (std::size_t a = 0; a < working.size(); ++a) {
    for (std::size_t b = 0; b < working.size(); ++b) {
      double acc = 0.0;
      for (std::size_t z = 1; z + 1 < fine.size(); ++z) acc += left[a * fine.size() + z] * right[b * fine.size() + z];
      worst = std::max(worst, std::abs(acc * fine.dx() - direct[a * working.size() + b]));
    }
  }
  return worst;
}

}  // namespace rvcyl
