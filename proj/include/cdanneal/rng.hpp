#pragma once

// Counter-based generator: every draw is a pure function of (seed, counters),
// so instance sampling does not depend on call order or thread scheduling.
// Mixing is SplitMix64 (Steele, Lea, Flood 2014); normals use Box-Muller.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cdanneal::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hash of a seed and two counters.
inline constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Standard normal draw for (seed, index), Box-Muller cosine branch.
inline double standard_normal(std::uint64_t seed, std::uint64_t index) {
  const double u1 = 1.0 - to_unit(counter_hash(seed, index, 0));  // (0, 1]
  const double u2 = to_unit(counter_hash(seed, index, 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cdanneal::rng
