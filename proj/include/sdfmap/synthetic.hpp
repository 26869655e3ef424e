#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdfmap/dataset_io.hpp"
#include "sdfmap/geometry.hpp"
#include "sdfmap/mesher.hpp"

namespace sdfmap {

// A generated dataset: posed scans with exact ray-cast endpoints (kept in
// double precision here; quantization to float32 happens only on write) and
// ground-truth meshes.
struct SyntheticScene {
  std::vector<Pose> poses;
  std::vector<std::vector<Vec3>> scans;  // sensor-frame points
  TriangleMesh gt_mesh;
  // Populated by the two-region scene: the ground truth restricted to each
  // half, for measuring forgetting on region A alone.
  TriangleMesh gt_region_a;
  TriangleMesh gt_region_b;
  std::string description;
};

// Sphere of the given radius at the origin, viewed from a spiral of sensor
// positions at distance 2*radius. Every beam hits; endpoints satisfy
// | |p| - radius | < 1e-9 before quantization.
SyntheticScene make_sphere_scene(double radius, int scan_count,
                                 int beams_per_scan, uint64_t seed);

// Rectangular room interior scanned from a ring of sensors inside.
// Endpoints lie exactly on one of the six wall planes.
SyntheticScene make_room_scene(double scale, int scan_count,
                               int beams_per_scan, uint64_t seed);

// Stepped corridor split at x = 0 into region A (x < 0, floor at z = 0) and
// region B (x > 0, floor raised to z = 0.6). The first half of the scans
// observes only region A, the second half only region B; shared coarse grid
// cells around the boundary carry the forgetting pressure between them.
SyntheticScene make_two_region_scene(int scan_count, int beams_per_scan,
                                     uint64_t seed);

inline constexpr double kTwoRegionSplit = 0.25;  // endpoint cull margin, meters

// Write scans/NNNNNN.bin, poses.txt, gt_mesh.ply, per-region GT meshes when
// present, and scene.txt into out_dir (created if missing).
void write_scene(const SyntheticScene& scene, const std::string& out_dir);

}  // namespace sdfmap
