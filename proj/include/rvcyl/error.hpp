#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rvcyl {

enum class Errc {
  invalid_parameter,
  grid_mismatch,
  ladder_too_fine,
  dimension,
  mode_divergence,
  truncation_inadmissible,
  blow_up,
  out_of_range,
  config,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::grid_mismatch: return "grid-mismatch";
    case Errc::ladder_too_fine: return "ladder-too-fine";
    case Errc::dimension: return "dimension";
    case Errc::mode_divergence: return "mode-divergence";
    case Errc::truncation_inadmissible: return "truncation-inadmissible";
    case Errc::blow_up: return "blow-up";
    case Errc::out_of_range: return "out-of-range";
    case Errc::config: return "config";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library. The code is
/// stable and intended for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised when the regularized integral of a single noise mode grows as the
/// regularization parameter shrinks. Carries the 1-based mode index.
class ModeDivergence : public Error {
 public:
  explicit ModeDivergence(std::size_t mode)
      : Error(Errc::mode_divergence, "forward integral of mode " + std::to_string(mode) +
                                         " does not stabilize along the epsilon ladder"),
        mode_(mode) {}

  [[nodiscard]] std::size_t mode() const noexcept { return mode_; }

 private:
  std::size_t mode_;
};

namespace detail {

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace detail
}  // namespace rvcyl
