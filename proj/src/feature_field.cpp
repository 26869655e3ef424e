#include "sdfmap/feature_field.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "sdfmap/errors.hpp"
#include "sdfmap/rng.hpp"

namespace sdfmap {

namespace {

constexpr char kFieldMagic[8] = {'S', 'D', 'F', 'M', 'F', 'L', 'D', '\0'};
constexpr uint32_t kFieldVersion = 1;

constexpr double kFeatureInitScale = 1e-2;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("field file: truncated read");
}

}  // namespace

FieldLayout FieldLayout::centered_on(const Vec3& center, double leaf_size,
                                     int level_count, int feature_len) {
  FieldLayout l;
  l.leaf_size = leaf_size;
  l.level_count = level_count;
  l.feature_len = feature_len;
  for (int a = 0; a < 3; ++a) {
    l.world_offset[a] =
        (1ll << 20) - static_cast<int64_t>(std::floor(center[a] / leaf_size));
  }
  return l;
}

FeatureField::FeatureField(const FieldLayout& layout, uint64_t init_seed)
    : layout_(layout), init_seed_(init_seed) {
  if (layout_.level_count < 1)
    throw ArgumentError("feature field needs at least one level");
  if (layout_.feature_len < 1)
    throw ArgumentError("feature length must be positive");
  if (!(layout_.leaf_size > 0.0))
    throw ArgumentError("leaf size must be positive");
  tables_.resize(layout_.level_count);
}

Vec3 FeatureField::to_grid(const Vec3& x) const {
  return Vec3(x[0] / layout_.leaf_size + double(layout_.world_offset[0]),
              x[1] / layout_.leaf_size + double(layout_.world_offset[1]),
              x[2] / layout_.leaf_size + double(layout_.world_offset[2]));
}

Vec3 FeatureField::grid_to_world(double ux, double uy, double uz) const {
  return Vec3((ux - double(layout_.world_offset[0])) * layout_.leaf_size,
              (uy - double(layout_.world_offset[1])) * layout_.leaf_size,
              (uz - double(layout_.world_offset[2])) * layout_.leaf_size);
}

void FeatureField::init_slot_feature(uint32_t slot, int level, uint64_t code) {
  // Seed from (init_seed, level, code) so a corner's initial value does not
  // depend on allocation order or on save/load history.
  Rng rng(derive_seed(init_seed_, uint64_t(level), code));
  double* f = feature(slot);
  for (int i = 0; i < layout_.feature_len; ++i)
    f[i] = uniform_in(rng, -kFeatureInitScale, kFeatureInitScale);
}

uint32_t FeatureField::corner_slot_or_insert(int level, uint64_t code) {
  bool inserted = false;
  uint32_t fresh = static_cast<uint32_t>(slot_keys_.size());
  uint32_t slot = tables_[level].find_or_insert(code, fresh, inserted);
  if (inserted) {
    size_t L = layout_.feature_len;
    features_.resize(features_.size() + L, 0.0);
    anchors_.resize(anchors_.size() + L, 0.0);
    importance_.resize(importance_.size() + L, 0.0);
    adam_m_.resize(adam_m_.size() + L, 0.0);
    adam_v_.resize(adam_v_.size() + L, 0.0);
    adam_step_.push_back(0);
    slot_keys_.push_back(code);
    slot_levels_.push_back(level);
    init_slot_feature(slot, level, code);
    std::memcpy(anchor(slot), feature(slot), L * sizeof(double));
  }
  return slot;
}

void FeatureField::allocate(const Vec3& x) {
  Vec3 u = to_grid(x);
  for (int h = 0; h < layout_.level_count; ++h) {
    double scale = double(1ull << h);
    int64_t i0[3];
    for (int a = 0; a < 3; ++a) {
      double uh = u[a] / scale;
      int64_t idx = static_cast<int64_t>(std::floor(uh));
      if (idx < 0 || idx + 1 > int64_t(kMortonAxisMask))
        throw RangeError("allocate: point outside addressable volume on axis " +
                         std::string(1, char('x' + a)));
      i0[a] = idx;
    }
    for (int c = 0; c < 8; ++c) {
      uint64_t cx = uint64_t(i0[0] + (c & 1));
      uint64_t cy = uint64_t(i0[1] + ((c >> 1) & 1));
      uint64_t cz = uint64_t(i0[2] + ((c >> 2) & 1));
      corner_slot_or_insert(h, morton_encode(cx, cy, cz));
    }
  }
}

void FeatureField::allocate_scan(std::span<const Vec3> points) {
  for (const Vec3& p : points) allocate(p);
}

bool FeatureField::query(const Vec3& x, QueryResult& out) const {
  out.feature.assign(layout_.feature_len, 0.0);
  out.contributions.clear();
  Vec3 u = to_grid(x);
  bool any = false;
  for (int h = 0; h < layout_.level_count; ++h) {
    double scale = double(1ull << h);
    int64_t i0[3];
    double t[3];
    bool in_range = true;
    for (int a = 0; a < 3; ++a) {
      double uh = u[a] / scale;
      double fl = std::floor(uh);
      i0[a] = static_cast<int64_t>(fl);
      t[a] = uh - fl;
      if (i0[a] < 0 || i0[a] + 1 > int64_t(kMortonAxisMask)) in_range = false;
    }
    if (!in_range) continue;

    uint32_t slots[8];
    bool complete = true;
    for (int c = 0; c < 8; ++c) {
      uint64_t cx = uint64_t(i0[0] + (c & 1));
      uint64_t cy = uint64_t(i0[1] + ((c >> 1) & 1));
      uint64_t cz = uint64_t(i0[2] + ((c >> 2) & 1));
      uint32_t s = tables_[h].find(morton_encode(cx, cy, cz));
      if (s == MortonTable::kNotFound) {
        complete = false;
        break;
      }
      slots[c] = s;
    }
    if (!complete) continue;

    any = true;
    for (int c = 0; c < 8; ++c) {
      double wx = (c & 1) ? t[0] : 1.0 - t[0];
      double wy = ((c >> 1) & 1) ? t[1] : 1.0 - t[1];
      double wz = ((c >> 2) & 1) ? t[2] : 1.0 - t[2];
      double w = wx * wy * wz;
      const double* f = feature(slots[c]);
      for (int i = 0; i < layout_.feature_len; ++i) out.feature[i] += w * f[i];
      out.contributions.push_back({slots[c], h, w});
    }
  }
  if (!any) {
    out.feature.clear();
    out.contributions.clear();
  }
  return any;
}

bool FeatureField::leaf_complete(const Vec3& x) const {
  Vec3 u = to_grid(x);
  int64_t i0[3];
  for (int a = 0; a < 3; ++a) {
    i0[a] = static_cast<int64_t>(std::floor(u[a]));
    if (i0[a] < 0 || i0[a] + 1 > int64_t(kMortonAxisMask)) return false;
  }
  for (int c = 0; c < 8; ++c) {
    uint64_t cx = uint64_t(i0[0] + (c & 1));
    uint64_t cy = uint64_t(i0[1] + ((c >> 1) & 1));
    uint64_t cz = uint64_t(i0[2] + ((c >> 2) & 1));
    if (tables_[0].find(morton_encode(cx, cy, cz)) == MortonTable::kNotFound)
      return false;
  }
  return true;
}

void FeatureField::reset_optimizer_state() {
  std::fill(adam_m_.begin(), adam_m_.end(), 0.0);
  std::fill(adam_v_.begin(), adam_v_.end(), 0.0);
  std::fill(adam_step_.begin(), adam_step_.end(), 0);
}

void FeatureField::snapshot_anchors(std::span<const uint32_t> slots) {
  size_t L = layout_.feature_len;
  for (uint32_t s : slots)
    std::memcpy(anchor(s), feature(s), L * sizeof(double));
}

Aabb FeatureField::allocated_leaf_bbox() const {
  Aabb box;
  tables_[0].for_each([&](uint64_t code, uint32_t) {
    uint64_t ix, iy, iz;
    morton_decode(code, ix, iy, iz);
    box.extend(grid_to_world(double(ix), double(iy), double(iz)));
  });
  return box;
}

void FeatureField::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("field file: cannot open " + path + " for write");
  os.write(kFieldMagic, 8);
  write_pod(os, kFieldVersion);
  write_pod(os, int32_t(kMortonBitsPerAxis));
  write_pod(os, int32_t(layout_.level_count));
  write_pod(os, int32_t(layout_.feature_len));
  write_pod(os, layout_.leaf_size);
  for (int a = 0; a < 3; ++a) write_pod(os, layout_.world_offset[a]);
  write_pod(os, init_seed_);
  write_pod(os, uint64_t(slot_keys_.size()));
  for (int h = 0; h < layout_.level_count; ++h) {
    // Sorted by code so the file does not depend on hash iteration order.
    std::vector<std::pair<uint64_t, uint32_t>> entries;
    entries.reserve(tables_[h].size());
    tables_[h].for_each([&](uint64_t code, uint32_t slot) {
      entries.emplace_back(code, slot);
    });
    std::sort(entries.begin(), entries.end());
    write_pod(os, uint64_t(entries.size()));
    for (auto& [code, slot] : entries) {
      write_pod(os, code);
      write_pod(os, slot);
    }
  }
  auto write_array = [&](const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             std::streamsize(v.size() * sizeof(double)));
  };
  write_array(features_);
  write_array(anchors_);
  write_array(importance_);
  if (!os) throw FormatError("field file: write failed for " + path);
}

FeatureField FeatureField::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("field file: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kFieldMagic, 8) != 0)
    throw FormatError("field file: bad magic in " + path);
  uint32_t version;
  read_pod(is, version);
  if (version != kFieldVersion)
    throw FormatError("field file: unsupported version " +
                      std::to_string(version));
  int32_t bits, levels, flen;
  read_pod(is, bits);
  if (bits != kMortonBitsPerAxis)
    throw FormatError("field file: unsupported bits per axis " +
                      std::to_string(bits));
  read_pod(is, levels);
  read_pod(is, flen);
  FieldLayout layout;
  layout.level_count = levels;
  layout.feature_len = flen;
  read_pod(is, layout.leaf_size);
  for (int a = 0; a < 3; ++a) read_pod(is, layout.world_offset[a]);
  uint64_t init_seed, slot_count;
  read_pod(is, init_seed);
  read_pod(is, slot_count);

  FeatureField field(layout, init_seed);
  field.slot_keys_.resize(slot_count);
  field.slot_levels_.resize(slot_count);
  for (int h = 0; h < levels; ++h) {
    uint64_t n;
    read_pod(is, n);
    for (uint64_t i = 0; i < n; ++i) {
      uint64_t code;
      uint32_t slot;
      read_pod(is, code);
      read_pod(is, slot);
      if (slot >= slot_count)
        throw FormatError("field file: slot index out of range");
      bool inserted = false;
      field.tables_[h].find_or_insert(code, slot, inserted);
      if (!inserted) throw FormatError("field file: duplicate corner code");
      field.slot_keys_[slot] = code;
      field.slot_levels_[slot] = h;
    }
  }
  size_t total = size_t(slot_count) * size_t(flen);
  auto read_array = [&](std::vector<double>& v) {
    v.resize(total);
    is.read(reinterpret_cast<char*>(v.data()),
            std::streamsize(total * sizeof(double)));
    if (!is) throw FormatError("field file: truncated parameter block");
  };
  read_array(field.features_);
  read_array(field.anchors_);
  read_array(field.importance_);
  field.adam_m_.assign(total, 0.0);
  field.adam_v_.assign(total, 0.0);
  field.adam_step_.assign(slot_count, 0);
  return field;
}

bool FeatureField::operator==(const FeatureField& other) const {
  if (layout_.leaf_size != other.layout_.leaf_size ||
      layout_.level_count != other.layout_.level_count ||
      layout_.feature_len != other.layout_.feature_len ||
      layout_.world_offset != other.layout_.world_offset ||
      init_seed_ != other.init_seed_ ||
      slot_keys_.size() != other.slot_keys_.size())
    return false;
  // Compare as (level, code) -> values, independent of slot numbering.
  for (int h = 0; h < layout_.level_count; ++h) {
    if (tables_[h].size() != other.tables_[h].size()) return false;
    bool equal = true;
    tables_[h].for_each([&](uint64_t code, uint32_t slot) {
      if (!equal) return;
      uint32_t os = other.tables_[h].find(code);
      if (os == MortonTable::kNotFound) {
        equal = false;
        return;
      }
      size_t L = layout_.feature_len;
      if (std::memcmp(feature(slot), other.feature(os), L * sizeof(double)) ||
          std::memcmp(anchor(slot), other.anchor(os), L * sizeof(double)) ||
          std::memcmp(importance(slot), other.importance(os),
                      L * sizeof(double)))
        equal = false;
    });
    if (!equal) return false;
  }
  return true;
}

}  // namespace sdfmap
