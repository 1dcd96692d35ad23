#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace pccmh::rng {

using Engine = std::mt19937_64;

// std::uniform_real_distribution and friends are implementation-defined, so
// every draw below is derived from raw engine words. Same seed, same stream,
// on any platform.

// Uniform double in [0, 1), 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller. Two engine words per draw.
inline double normal(Engine& eng) {
  const double u1 = (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  const double u2 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Unbiased-enough index draw for desk-scale n (rejection-free floor).
inline std::size_t uniform_index(Engine& eng, std::size_t n) {
  std::size_t i = static_cast<std::size_t>(uniform01(eng) * static_cast<double>(n));
  return i >= n ? n - 1 : i;
}

// Fisher-Yates; std::shuffle is implementation-defined.
template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(eng, i);
    std::swap(v[i - 1], v[j]);
  }
}

// splitmix64 finalizer; used to derive independent per-cell seeds.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace pccmh::rng
