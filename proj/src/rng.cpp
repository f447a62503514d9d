#include "risnoma/rng.hpp"

#include <cmath>
#include <numbers>

namespace risnoma {

Rng Rng::stream(std::uint64_t seed, const StreamKey& key) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ key.draw);
  h = splitmix64(h ^ (key.user * 0x100000001B3ULL));
  h = splitmix64(h ^ (key.link + 0x632BE59BD9B4E019ULL));
  return Rng(h);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::complex<double> Rng::complex_normal() {
  constexpr double kScale = 0.70710678118654752440;
  const double re = normal();
  const double im = normal();
  return {kScale * re, kScale * im};
}

}  // namespace risnoma
