#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdfmap/geometry.hpp"
#include "sdfmap/mesher.hpp"

namespace sdfmap {

// Exact nearest-neighbor index over a fixed cloud. Median-split kd-tree;
// results equal brute force (same minimal distance, ties broken toward the
// smaller squared distance which is identical either way).
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points);

  size_t size() const { return points_.size(); }

  // Squared distance to the nearest stored point.
  double nearest_sq(const Vec3& query) const;

 private:
  struct Node {
    Aabb bounds;
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    uint32_t left = 0, right = 0;   // child node indices
    uint32_t begin = 0, end = 0;    // leaf point range
  };

  uint32_t build(uint32_t begin, uint32_t end);
  void search(uint32_t node, const Vec3& q, double& best_sq) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  uint32_t root_ = 0;
};

// Distance from every `from` point to its nearest `to` point.
std::vector<double> nn_distances(const std::vector<Vec3>& from,
                                 const std::vector<Vec3>& to);

// O(n*m) reference used by tests and kept as the correctness oracle.
std::vector<double> nn_distances_brute(const std::vector<Vec3>& from,
                                       const std::vector<Vec3>& to);

// Area-weighted uniform sampling of a triangle mesh surface.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, size_t n_points,
                                 uint64_t seed);

struct ReconReport {
  double completion_cm = 0.0;        // mean gt -> pred distance
  double accuracy_cm = 0.0;          // mean pred -> gt(.mask) distance
  double chamfer_l1_cm = 0.0;        // (completion + accuracy) / 2
  double completion_ratio_pct = 0.0; // % of gt points within tau
  double precision_pct = 0.0;        // % of pred points within tau
  double f_score_pct = 0.0;          // harmonic mean of the two ratios
  double tau_cm = 0.0;
  size_t pred_count = 0;
  size_t gt_count = 0;
};

// tau in meters; distances reported in cm. gt_mask, when non-empty,
// replaces gt as the target of the accuracy direction only.
ReconReport compute_report(const std::vector<Vec3>& pred,
                           const std::vector<Vec3>& gt,
                           const std::vector<Vec3>& gt_mask, double tau);

std::string report_csv_header();
std::string report_csv_row(const ReconReport& r);
std::string report_table(const ReconReport& r);

}  // namespace sdfmap
