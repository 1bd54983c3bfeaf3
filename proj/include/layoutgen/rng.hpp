#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace layoutgen {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Uniform double strictly inside (0, 1); bit-stable across platforms.
inline double uniform01(std::mt19937_64& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw (Box-Muller, cosine branch; consumes two uniforms).
inline double normal01(std::mt19937_64& g) {
  const double u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Standard Gumbel draw.
inline double gumbel01(std::mt19937_64& g) { return -std::log(-std::log(uniform01(g))); }

}  // namespace layoutgen
