#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hypmix {

// std::mt19937_64's output sequence is fixed by the standard, but the
// <random> distributions are not. Everything that must replay bit-for-bit
// across toolchains draws through the helpers below instead.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a child seed from a parent seed and a path of indices.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (auto p : path) {
    h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  }
  return h;
}

// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = Rng::max() - (Rng::max() - n + 1) % n;
  std::uint64_t draw = rng();
  while (draw > limit) draw = rng();
  return draw % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool fair_coin(Rng& rng) { return (rng() >> 63) != 0; }

}  // namespace hypmix
