#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace risnoma {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Identifies one random stream inside an experiment. Streams are keyed by
/// (draw, user, link) so that parallel sweeps reproduce serial ones.
struct StreamKey {
  std::uint64_t draw = 0;
  std::uint64_t user = 0;
  std::uint64_t link = 0;
};

/// Portable seeded generator: mt19937_64 engine with hand-rolled uniform and
/// Gaussian transforms, so the sample sequence does not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Generator for the stream `key` of master seed `seed`.
  static Rng stream(std::uint64_t seed, const StreamKey& key);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (no cached second variate).
  double normal();
  /// Circularly-symmetric complex Gaussian with unit variance.
  std::complex<double> complex_normal();

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace risnoma
