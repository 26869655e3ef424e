#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdfmap/geometry.hpp"
#include "sdfmap/morton.hpp"
#include "sdfmap/morton_table.hpp"

namespace sdfmap {

// Placement and shape of the sparse multi-resolution corner grid.
struct FieldLayout {
  double leaf_size = 0.1;      // level-0 cell edge in meters
  int level_count = 4;         // levels 0..level_count-1, cell doubles per level
  int feature_len = 8;         // doubles stored per corner
  // World origin of grid index 0, expressed in level-0 cells. Kept integral
  // so all levels share exact corner positions.
  std::array<int64_t, 3> world_offset = {1ll << 20, 1ll << 20, 1ll << 20};

  double node_size(int level) const {
    return leaf_size * static_cast<double>(1ull << level);
  }

  // Offset chosen so `center` sits mid-range of the addressable volume.
  static FieldLayout centered_on(const Vec3& center, double leaf_size,
                                 int level_count, int feature_len);
};

// One corner's contribution to an interpolated feature.
struct Contribution {
  uint32_t slot;   // index into the per-level slot arrays (global, see below)
  int level;
  double weight;   // trilinear weight in [0,1]
};

// Result of interpolating the field at a point.
struct QueryResult {
  std::vector<double> feature;             // summed across levels
  std::vector<Contribution> contributions; // every corner that was read
};

// Sparse hierarchical feature grid. Each octree level keeps a hash table
// from the Morton code of a corner to a slot in flat per-corner storage.
// Storage is global across levels: slot indices address features_,
// anchors_, importance_ and the Adam moments uniformly.
class FeatureField {
 public:
  FeatureField(const FieldLayout& layout, uint64_t init_seed);

  const FieldLayout& layout() const { return layout_; }
  uint64_t init_seed() const { return init_seed_; }
  size_t slot_count() const { return slot_keys_.size(); }
  size_t level_slot_count(int level) const { return tables_[size_t(level)].size(); }

  // Allocate the 8 corners of the node containing x at every level.
  // Throws RangeError if x falls outside the addressable volume.
  void allocate(const Vec3& x);
  void allocate_scan(std::span<const Vec3> points);

  // Interpolate at x. Returns false (and clears `out`) when no level has
  // all 8 corners of the containing node allocated. On success `feature`
  // holds the level-summed vector and `contributions` every corner read.
  bool query(const Vec3& x, QueryResult& out) const;

  // True when the finest-level cell containing x has all 8 corners. Used by
  // the mesher to confine extraction to directly observed space, where
  // coarse-only extrapolation cannot fabricate surfaces.
  bool leaf_complete(const Vec3& x) const;

  double* feature(uint32_t slot) { return features_.data() + size_t(slot) * layout_.feature_len; }
  const double* feature(uint32_t slot) const { return features_.data() + size_t(slot) * layout_.feature_len; }
  double* anchor(uint32_t slot) { return anchors_.data() + size_t(slot) * layout_.feature_len; }
  const double* anchor(uint32_t slot) const { return anchors_.data() + size_t(slot) * layout_.feature_len; }
  double* importance(uint32_t slot) { return importance_.data() + size_t(slot) * layout_.feature_len; }
  const double* importance(uint32_t slot) const { return importance_.data() + size_t(slot) * layout_.feature_len; }
  double* adam_m(uint32_t slot) { return adam_m_.data() + size_t(slot) * layout_.feature_len; }
  double* adam_v(uint32_t slot) { return adam_v_.data() + size_t(slot) * layout_.feature_len; }
  uint64_t& adam_step(uint32_t slot) { return adam_step_[slot]; }
  void reset_optimizer_state();

  // Copy current feature values into the anchors for the given slots.
  void snapshot_anchors(std::span<const uint32_t> slots);

  int level_of_slot(uint32_t slot) const { return slot_levels_[slot]; }
  uint64_t code_of_slot(uint32_t slot) const { return slot_keys_[slot]; }

  // World-space box of the leaf cells that have any allocated corner,
  // used to bound meshing. Invalid box when the field is empty.
  Aabb allocated_leaf_bbox() const;

  // Grid coordinate helpers (level-0 cell units, includes world_offset).
  Vec3 to_grid(const Vec3& x) const;
  Vec3 grid_to_world(double ux, double uy, double uz) const;

  void save(const std::string& path) const;
  static FeatureField load(const std::string& path);

  bool operator==(const FeatureField& other) const;

 private:
  void init_slot_feature(uint32_t slot, int level, uint64_t code);
  uint32_t corner_slot_or_insert(int level, uint64_t code);

  FieldLayout layout_;
  uint64_t init_seed_;
  std::vector<MortonTable> tables_;   // one per level
  std::vector<double> features_;     // slot-major [slot][feature_len]
  std::vector<double> anchors_;
  std::vector<double> importance_;
  std::vector<double> adam_m_;
  std::vector<double> adam_v_;
  std::vector<uint64_t> adam_step_;
  std::vector<uint64_t> slot_keys_;
  std::vector<int32_t> slot_levels_;
};

}  // namespace sdfmap
