#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sdfmap {

// SplitMix64 finalizer. Bijective on 64-bit ints, good avalanche.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derive an independent stream seed from a base seed and two indices.
// Used to give each scan / beam / corner its own deterministic stream
// regardless of processing order.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0) {
  return mix64(mix64(mix64(base) ^ a) ^ b);
}

using Rng = std::mt19937_64;

// Map a 64-bit draw to [0,1) using the top 53 bits. We avoid
// std::uniform_real_distribution because its output is not specified
// bit-for-bit across standard library implementations.
inline double uniform_double(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_double(rng);
}

// Unbiased integer in [0, n). Rejection on the top of the range.
inline uint64_t uniform_index(Rng& rng, uint64_t n) {
  if (n == 0) return 0;
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

template <typename T>
void shuffle_fisher_yates(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace sdfmap
