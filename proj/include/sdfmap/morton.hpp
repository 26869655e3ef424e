#pragma once

#include <cstdint>
#include <string>

#include "sdfmap/errors.hpp"

namespace sdfmap {

inline constexpr int kMortonBitsPerAxis = 21;
inline constexpr uint64_t kMortonAxisMask = (1ull << kMortonBitsPerAxis) - 1;

namespace detail {

// Spread the low 21 bits of x so bit j lands at bit 3j.
inline uint64_t split_by_3(uint64_t x) {
  x &= 0x1fffffull;
  x = (x | (x << 32)) & 0x1f00000000ffffull;
  x = (x | (x << 16)) & 0x1f0000ff0000ffull;
  x = (x | (x << 8)) & 0x100f00f00f00f00full;
  x = (x | (x << 4)) & 0x10c30c30c30c30c3ull;
  x = (x | (x << 2)) & 0x1249249249249249ull;
  return x;
}

inline uint64_t compact_by_3(uint64_t x) {
  x &= 0x1249249249249249ull;
  x = (x | (x >> 2)) & 0x10c30c30c30c30c3ull;
  x = (x | (x >> 4)) & 0x100f00f00f00f00full;
  x = (x | (x >> 8)) & 0x1f0000ff0000ffull;
  x = (x | (x >> 16)) & 0x1f00000000ffffull;
  x = (x | (x >> 32)) & 0x1fffffull;
  return x;
}

}  // namespace detail

// Interleave three 21-bit coordinates into a 63-bit Z-order key.
// Bit j of ix maps to bit 3j, iy to 3j+1, iz to 3j+2.
inline uint64_t morton_encode(uint64_t ix, uint64_t iy, uint64_t iz) {
  if (ix > kMortonAxisMask)
    throw RangeError("morton_encode: x index " + std::to_string(ix) +
                     " exceeds 21-bit range");
  if (iy > kMortonAxisMask)
    throw RangeError("morton_encode: y index " + std::to_string(iy) +
                     " exceeds 21-bit range");
  if (iz > kMortonAxisMask)
    throw RangeError("morton_encode: z index " + std::to_string(iz) +
                     " exceeds 21-bit range");
  return detail::split_by_3(ix) | (detail::split_by_3(iy) << 1) |
         (detail::split_by_3(iz) << 2);
}

inline void morton_decode(uint64_t code, uint64_t& ix, uint64_t& iy,
                          uint64_t& iz) {
  ix = detail::compact_by_3(code);
  iy = detail::compact_by_3(code >> 1);
  iz = detail::compact_by_3(code >> 2);
}

}  // namespace sdfmap
