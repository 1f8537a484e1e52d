#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace gpm {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds from one
/// master seed so that parallel work is reproducible regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(rng() >> 11) + 0.5) * scale;
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// log of a Gamma(shape, 1) variate. Stays finite for tiny shapes where the
/// variate itself underflows: uses G(a) = G(a + 1) * U^(1/a).
inline double log_gamma_variate(double shape, Rng& rng) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  return std::log(g) + std::log(uniform_open(rng)) / shape;
}

inline double gamma_variate(double shape, double rate, Rng& rng) {
  return std::exp(log_gamma_variate(shape, rng)) / rate;
}

}  // namespace gpm
