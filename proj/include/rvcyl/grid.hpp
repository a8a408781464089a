#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rvcyl/error.hpp"

namespace rvcyl {

/// Uniform partition of [0, T] into N steps. Node k sits at k*T/N, with the
/// last node pinned to T exactly.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    detail::require(std::isfinite(horizon) && horizon > 0.0, Errc::invalid_parameter,
                    "time horizon must be positive, got " + std::to_string(horizon));
    detail::require(steps >= 2, Errc::invalid_parameter,
                    "time grid needs at least 2 steps, got " + std::to_string(steps));
  }

  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
  [[nodiscard]] std::size_t size() const noexcept { return steps_ + 1; }
  [[nodiscard]] double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }

  [[nodiscard]] double node(std::size_t k) const noexcept {
    if (k >= steps_) return horizon_;
    return static_cast<double>(k) * horizon_ / static_cast<double>(steps_);
  }

  [[nodiscard]] std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = node(k);
    return out;
  }

  /// Index of the grid node nearest to t (t clamped to [0, T]).
  [[nodiscard]] std::size_t nearest_index(double t) const noexcept {
    if (!(t > 0.0)) return 0;
    if (t >= horizon_) return steps_;
    return static_cast<std::size_t>(std::llround(t / dt()));
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.horizon_ == b.horizon_ && a.steps_ == b.steps_;
  }

 private:
  double horizon_;
  std::size_t steps_;
};

inline TimeGrid make_time_grid(double horizon, std::size_t steps) { return TimeGrid(horizon, steps); }

/// Uniform partition of [0, 1] into P cells; x_0 = 0 and x_P = 1 carry the
/// Dirichlet condition.
class SpaceGrid {
 public:
  explicit SpaceGrid(std::size_t points) : points_(points) {
    detail::require(points >= 4, Errc::invalid_parameter,
                    "space grid needs at least 4 cells, got " + std::to_string(points));
  }

  [[nodiscard]] std::size_t points() const noexcept { return points_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_ + 1; }
  [[nodiscard]] double dx() const noexcept { return 1.0 / static_cast<double>(points_); }

  [[nodiscard]] double node(std::size_t i) const noexcept {
    if (i >= points_) return 1.0;
    return static_cast<double>(i) / static_cast<double>(points_);
  }

  [[nodiscard]] std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
    return out;
  }

  [[nodiscard]] std::size_t nearest_index(double x) const noexcept {
    if (!(x > 0.0)) return 0;
    if (x >= 1.0) return points_;
    return static_cast<std::size_t>(std::llround(x * static_cast<double>(points_)));
  }

  friend bool operator==(const SpaceGrid& a, const SpaceGrid& b) noexcept { return a.points_ == b.points_; }

 private:
  std::size_t points_;
};

}  // namespace rvcyl
