#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace navlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG stream. Every draw is derived from raw 64-bit engine
/// output rather than <random> distribution objects, so identical seeds
/// reproduce identical values regardless of library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform index in [0, n).
  int below(int n) {
    const int i = static_cast<int>(uniform() * static_cast<double>(n));
    return i >= n ? n - 1 : i;
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent substream from a base seed and a key path.
/// Used for schedule-independent determinism: every stochastic site gets
/// its own stream keyed by what it is, not by when it runs.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return Rng(h);
}

// Stream tags for substream derivation.
namespace stream {
inline constexpr std::uint64_t kGraph = 0x67726170ULL;
inline constexpr std::uint64_t kEpisodes = 0x65706973ULL;
inline constexpr std::uint64_t kSftBatch = 0x73667462ULL;
inline constexpr std::uint64_t kRlBatch = 0x726c6261ULL;
inline constexpr std::uint64_t kRollout = 0x726f6c6cULL;
inline constexpr std::uint64_t kEval = 0x6576616cULL;
}  // namespace stream

}  // namespace navlab
