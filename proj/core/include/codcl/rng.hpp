#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace codcl {

// Seed derivation and sampling helpers. std::uniform_real_distribution and
// friends are implementation-defined, so all draws go through these to keep
// runs reproducible across standard libraries.

/// splitmix64 finalizer; decorrelates seeds derived from small integers.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(a ^ mix_seed(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Unbiased uniform draw from {0, ..., n-1} via rejection.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t draw;
  do {
    draw = gen();
  } while (draw >= limit);
  return draw % n;
}

/// Standard normal via Box-Muller.
inline double normal01(std::mt19937_64& gen) {
  const double u1 = 1.0 - uniform01(gen);  // (0, 1]
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace codcl
