#pragma once

#include <cstdint>
#include <vector>

#include "sdfmap/rng.hpp"

namespace sdfmap {

// Open-addressing hash map from Morton code to slot index.
// Insert-only (the field never frees a corner), linear probing,
// capacity kept a power of two with load factor <= 0.5.
class MortonTable {
 public:
  static constexpr uint64_t kEmpty = ~0ull;
  static constexpr uint32_t kNotFound = ~0u;

  explicit MortonTable(size_t initial_capacity = 64) {
    size_t cap = 64;
    while (cap < initial_capacity * 2) cap <<= 1;
    keys_.assign(cap, kEmpty);
    values_.assign(cap, 0);
  }

  size_t size() const { return size_; }

  uint32_t find(uint64_t key) const {
    size_t mask = keys_.size() - 1;
    size_t i = mix64(key) & mask;
    while (true) {
      if (keys_[i] == key) return values_[i];
      if (keys_[i] == kEmpty) return kNotFound;
      i = (i + 1) & mask;
    }
  }

  // Returns the existing slot, or inserts `fresh` and returns it.
  uint32_t find_or_insert(uint64_t key, uint32_t fresh, bool& inserted) {
    if ((size_ + 1) * 2 > keys_.size()) grow();
    size_t mask = keys_.size() - 1;
    size_t i = mix64(key) & mask;
    while (true) {
      if (keys_[i] == key) {
        inserted = false;
        return values_[i];
      }
      if (keys_[i] == kEmpty) {
        keys_[i] = key;
        values_[i] = fresh;
        ++size_;
        inserted = true;
        return fresh;
      }
      i = (i + 1) & mask;
    }
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (size_t i = 0; i < keys_.size(); ++i)
      if (keys_[i] != kEmpty) fn(keys_[i], values_[i]);
  }

 private:
  void grow() {
    std::vector<uint64_t> old_keys = std::move(keys_);
    std::vector<uint32_t> old_values = std::move(values_);
    keys_.assign(old_keys.size() * 2, kEmpty);
    values_.assign(old_keys.size() * 2, 0);
    size_t mask = keys_.size() - 1;
    for (size_t i = 0; i < old_keys.size(); ++i) {
      if (old_keys[i] == kEmpty) continue;
      size_t j = mix64(old_keys[i]) & mask;
      while (keys_[j] != kEmpty) j = (j + 1) & mask;
      keys_[j] = old_keys[i];
      values_[j] = old_values[i];
    }
  }

  std::vector<uint64_t> keys_;
  std::vector<uint32_t> values_;
  size_t size_ = 0;
};

}  // namespace sdfmap
