#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdfmap/geometry.hpp"

namespace sdfmap {

struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();
};

struct Scan {
  Vec3 sensor_origin = Vec3::Zero();
  std::vector<Vec3> points;  // world frame
  size_t source_index = 0;
};

struct BinReadStats {
  size_t points = 0;
  size_t dropped_nan = 0;
};

// KITTI-convention scan: little-endian float32 quadruples (x,y,z,intensity).
// Intensity is discarded; non-finite points are dropped and counted.
std::vector<Vec3> read_scan_bin(const std::string& path,
                                BinReadStats* stats = nullptr);

void write_scan_bin(const std::string& path, const std::vector<Vec3>& points);

struct PlyData {
  std::vector<Vec3> vertices;
  std::vector<std::array<uint32_t, 3>> triangles;  // faces fan-triangulated
};

// Reads ascii or binary-little-endian PLY. Requires float or double vertex
// properties x, y, z; other properties and elements are skipped. Faces, if
// present, come back fan-triangulated.
PlyData read_ply(const std::string& path);

// Vertex positions only.
std::vector<Vec3> read_scan_ply(const std::string& path);

// One pose per line: 12 numbers, row-major 3x4 [R|t] (KITTI convention).
// Orthonormality drift up to 1e-6 passes silently, up to 1e-3 warns on
// stderr, beyond that is a format error.
std::vector<Pose> read_poses(const std::string& path);

void write_poses(const std::string& path, const std::vector<Pose>& poses);

// Transform sensor-frame points into a world-frame scan. Points beyond
// max_range (sensor-frame distance) are dropped; max_range <= 0 disables
// the filter.
Scan to_world(const std::vector<Vec3>& raw, const Pose& pose,
              double max_range = 0.0);

// Keep the first point seen in each voxel, preserving input order.
std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points,
                                   double voxel);

}  // namespace sdfmap
