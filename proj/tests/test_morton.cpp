#include <cstdint>

#include "doctest.h"
#include "oracles.hpp"
#include "sdfmap/errors.hpp"
#include "sdfmap/morton.hpp"
#include "sdfmap/morton_table.hpp"
#include "sdfmap/rng.hpp"

using namespace sdfmap;

TEST_CASE("morton encode matches hand-pinned value") {
  // x=3 (bits 0,1), y=5 (bits 0,2), z=6 (bits 1,2) interleave to
  // bits 0,3 | 1,7 | 5,8 = 9 + 130 + 288.
  CHECK(morton_encode(3, 5, 6) == 427);
  CHECK(morton_encode(0, 0, 0) == 0);
  CHECK(morton_encode(1, 0, 0) == 1);
  CHECK(morton_encode(0, 1, 0) == 2);
  CHECK(morton_encode(0, 0, 1) == 4);
}

TEST_CASE("morton encode agrees with bit-loop oracle") {
  Rng rng(123);
  for (int i = 0; i < 100000; ++i) {
    uint64_t x = rng() & kMortonAxisMask;
    uint64_t y = rng() & kMortonAxisMask;
    uint64_t z = rng() & kMortonAxisMask;
    CHECK(morton_encode(x, y, z) == oracle::morton_bit_loop(x, y, z));
  }
}

TEST_CASE("morton roundtrips") {
  Rng rng(77);
  for (int i = 0; i < 100000; ++i) {
    uint64_t x = rng() & kMortonAxisMask;
    uint64_t y = rng() & kMortonAxisMask;
    uint64_t z = rng() & kMortonAxisMask;
    uint64_t dx = 0, dy = 0, dz = 0;
    morton_decode(morton_encode(x, y, z), dx, dy, dz);
    CHECK(dx == x);
    CHECK(dy == y);
    CHECK(dz == z);
  }
  // Extremes.
  uint64_t mx = 0, my = 0, mz = 0;
  morton_decode(morton_encode(kMortonAxisMask, kMortonAxisMask, kMortonAxisMask),
                mx, my, mz);
  CHECK(mx == kMortonAxisMask);
  CHECK(my == kMortonAxisMask);
  CHECK(mz == kMortonAxisMask);
}

TEST_CASE("morton rejects out-of-range coordinates") {
  CHECK_THROWS_AS(morton_encode(kMortonAxisMask + 1, 0, 0), RangeError);
  CHECK_THROWS_AS(morton_encode(0, kMortonAxisMask + 1, 0), RangeError);
  CHECK_THROWS_AS(morton_encode(0, 0, kMortonAxisMask + 1), RangeError);
}

TEST_CASE("morton table insert/find/grow") {
  MortonTable table;
  CHECK(table.size() == 0);
  CHECK(table.find(42) == MortonTable::kNotFound);

  // Insert enough keys to force several growth steps.
  Rng rng(9);
  std::vector<uint64_t> keys;
  for (int i = 0; i < 5000; ++i) keys.push_back(rng() >> 4);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  for (size_t i = 0; i < keys.size(); ++i) {
    bool inserted = false;
    uint32_t slot = table.find_or_insert(keys[i], static_cast<uint32_t>(i), inserted);
    CHECK(inserted);
    CHECK(slot == static_cast<uint32_t>(i));
  }
  CHECK(table.size() == keys.size());

  for (size_t i = 0; i < keys.size(); ++i) {
    bool inserted = true;
    uint32_t slot = table.find_or_insert(keys[i], 999999, inserted);
    CHECK_FALSE(inserted);
    CHECK(slot == static_cast<uint32_t>(i));
    CHECK(table.find(keys[i]) == static_cast<uint32_t>(i));
  }

  size_t visited = 0;
  table.for_each([&](uint64_t key, uint32_t slot) {
    CHECK(std::binary_search(keys.begin(), keys.end(), key));
    CHECK(slot < keys.size());
    ++visited;
  });
  CHECK(visited == keys.size());
}
