#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rvcyl {

// splitmix64 finalizer; used only to decorrelate stream identifiers.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed split: the derived seed depends only on the parent seed
/// and the stream coordinates, so adding replicas or modes never perturbs the
/// streams that already exist.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = mix64(parent);
  for (std::uint64_t c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream tags keep unrelated consumers of one parent seed apart.
namespace stream {
inline constexpr std::uint64_t mode = 1;
inline constexpr std::uint64_t replica = 2;
inline constexpr std::uint64_t auxiliary = 3;
inline constexpr std::uint64_t companion = 4;
}  // namespace stream

using Engine = std::mt19937_64;

class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double operator()() { return normal_(engine_); }

 private:
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rvcyl
