#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace cyberneuron {

// All randomness in the library flows through mt19937_64, whose output
// sequence is pinned by the standard. std::uniform_int_distribution is
// implementation-defined, so index draws use uniform_below instead; this
// keeps every seeded run bit-reproducible across compilers.
using Rng = std::mt19937_64;

// Unbiased draw from [0, n). Rejection-samples the tail so the result is
// exact, not merely approximately uniform. n must be >= 1.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t overhang = (max % n + 1) % n;  // 2^64 mod n
  std::uint64_t x = rng();
  if (overhang != 0) {
    while (x > max - overhang) x = rng();
  }
  return x % n;
}

// One splitmix64 step; used to derive independent sub-seeds from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic pseudo-random buffer, little-endian unpacking of mt19937_64
// words. Used for scan corpora and throughput buffers.
inline std::vector<std::uint8_t> random_bytes(std::size_t count, std::uint64_t seed) {
  std::vector<std::uint8_t> out(count);
  Rng rng(seed);
  std::size_t i = 0;
  for (; i + 8 <= count; i += 8) {
    std::uint64_t w = rng();
    for (int b = 0; b < 8; ++b) out[i + b] = static_cast<std::uint8_t>(w >> (8 * b));
  }
  if (i < count) {
    std::uint64_t w = rng();
    for (; i < count; ++i) {
      out[i] = static_cast<std::uint8_t>(w);
      w >>= 8;
    }
  }
  return out;
}

}  // namespace cyberneuron
