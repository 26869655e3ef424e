#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sdfmap/dataset_io.hpp"
#include "sdfmap/errors.hpp"
#include "sdfmap/rng.hpp"

using namespace sdfmap;

TEST_CASE("scan bin roundtrip") {
  auto dir = oracle::test_dir("bin_io");
  std::string path = (dir / "scan.bin").string();

  write_scan_bin(path, {});
  CHECK(read_scan_bin(path).empty());

  std::vector<Vec3> pts;
  Rng rng(2);
  for (int i = 0; i < 1000; ++i)
    pts.push_back(Vec3(uniform_in(rng, -50, 50), uniform_in(rng, -50, 50),
                       uniform_in(rng, -50, 50)));
  write_scan_bin(path, pts);
  BinReadStats stats;
  std::vector<Vec3> back = read_scan_bin(path, &stats);
  REQUIRE(back.size() == 1000);
  CHECK(stats.points == 1000);
  CHECK(stats.dropped_nan == 0);
  for (size_t i = 0; i < 1000; ++i) {
    // float32 quantization on write
    CHECK(back[i].x() == double(float(pts[i].x())));
    CHECK(back[i].y() == double(float(pts[i].y())));
    CHECK(back[i].z() == double(float(pts[i].z())));
  }
}

TEST_CASE("scan bin drops non-finite points and rejects truncation") {
  auto dir = oracle::test_dir("bin_bad");
  std::string path = (dir / "scan.bin").string();
  {
    std::ofstream out(path, std::ios::binary);
    float rec[4] = {1, 2, 3, 0};
    out.write(reinterpret_cast<char*>(rec), 16);
    float nanrec[4] = {std::nanf(""), 2, 3, 0};
    out.write(reinterpret_cast<char*>(nanrec), 16);
    float infrec[4] = {1, std::numeric_limits<float>::infinity(), 3, 0};
    out.write(reinterpret_cast<char*>(infrec), 16);
  }
  BinReadStats stats;
  auto pts = read_scan_bin(path, &stats);
  CHECK(pts.size() == 1);
  CHECK(stats.dropped_nan == 2);

  {
    std::ofstream out(path, std::ios::binary);
    char junk[22] = {0};
    out.write(junk, 22);
  }
  CHECK_THROWS_AS(read_scan_bin(path), FormatError);
  CHECK_THROWS_WITH_AS(read_scan_bin((dir / "none.bin").string()),
                       doctest::Contains("none.bin"), FormatError);
}

TEST_CASE("ascii and binary ply parse to the same data") {
  auto dir = oracle::test_dir("ply_io");
  std::string ascii_path = (dir / "a.ply").string();
  {
    std::ofstream out(ascii_path);
    out << "ply\nformat ascii 1.0\ncomment made by hand\n"
        << "element vertex 3\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property uchar red\n"
        << "element face 1\nproperty list uchar int vertex_indices\n"
        << "end_header\n"
        << "0 0 0 255\n1 0 0 10\n0 1 0 20\n"
        << "3 0 1 2\n";
  }
  PlyData a = read_ply(ascii_path);
  REQUIRE(a.vertices.size() == 3);
  REQUIRE(a.triangles.size() == 1);
  CHECK(a.vertices[1] == Vec3(1, 0, 0));
  CHECK(a.triangles[0] == std::array<uint32_t, 3>{0, 1, 2});

  // Quad faces fan-triangulate.
  std::string quad_path = (dir / "quad.ply").string();
  {
    std::ofstream out(quad_path);
    out << "ply\nformat ascii 1.0\nelement vertex 4\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "element face 1\nproperty list uchar int vertex_indices\n"
        << "end_header\n"
        << "0 0 0\n1 0 0\n1 1 0\n0 1 0\n"
        << "4 0 1 2 3\n";
  }
  PlyData quad = read_ply(quad_path);
  REQUIRE(quad.triangles.size() == 2);
  CHECK(quad.triangles[0] == std::array<uint32_t, 3>{0, 1, 2});
  CHECK(quad.triangles[1] == std::array<uint32_t, 3>{0, 2, 3});

  // Binary little-endian with an extra vertex property and double precision.
  std::string bin_path = (dir / "b.ply").string();
  {
    std::ofstream out(bin_path, std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex 2\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "property float confidence\n"
        << "element face 1\nproperty list uchar int vertex_indices\n"
        << "end_header\n";
    double v0[3] = {0.5, -1.25, 2.0};
    float c0 = 0.9f;
    double v1[3] = {3.0, 4.0, -5.5};
    float c1 = 0.1f;
    out.write(reinterpret_cast<char*>(v0), 24);
    out.write(reinterpret_cast<char*>(&c0), 4);
    out.write(reinterpret_cast<char*>(v1), 24);
    out.write(reinterpret_cast<char*>(&c1), 4);
    uint8_t count = 3;
    int32_t idx[3] = {0, 1, 0};
    out.write(reinterpret_cast<char*>(&count), 1);
    out.write(reinterpret_cast<char*>(idx), 12);
  }
  PlyData b = read_ply(bin_path);
  REQUIRE(b.vertices.size() == 2);
  CHECK(b.vertices[0] == Vec3(0.5, -1.25, 2.0));
  CHECK(b.vertices[1] == Vec3(3.0, 4.0, -5.5));
  REQUIRE(b.triangles.size() == 1);
  CHECK(b.triangles[0] == std::array<uint32_t, 3>{0, 1, 0});
}

TEST_CASE("ply reader rejects malformed input with structured errors") {
  auto dir = oracle::test_dir("ply_bad");
  auto write_and_expect_throw = [&](const std::string& name,
                                    const std::string& content) {
    std::string path = (dir / name).string();
    std::ofstream(path) << content;
    CHECK_THROWS_AS(read_ply(path), FormatError);
  };

  write_and_expect_throw("nomagic.ply", "plx\nformat ascii 1.0\nend_header\n");
  write_and_expect_throw("noformat.ply", "ply\nelement vertex 0\nend_header\n");
  write_and_expect_throw(
      "noy.ply",
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty "
      "float z\nend_header\n1 2\n");
  write_and_expect_throw("big_endian.ply",
                         "ply\nformat binary_big_endian 1.0\nelement vertex "
                         "0\nend_header\n");
  write_and_expect_throw(
      "short.ply",
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty "
      "float y\nproperty float z\nend_header\n0 0 0\n");
  write_and_expect_throw(
      "badindex.ply",
      "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty "
      "float y\nproperty float z\nelement face 1\nproperty list uchar int "
      "vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n");

  // The missing-property message names the property.
  std::string path = (dir / "noz.ply").string();
  std::ofstream(path) << "ply\nformat ascii 1.0\nelement vertex 1\nproperty "
                         "float x\nproperty float y\nend_header\n0 0\n";
  CHECK_THROWS_WITH_AS(read_ply(path), doctest::Contains("z"), FormatError);
}

TEST_CASE("pose file roundtrip and validation") {
  auto dir = oracle::test_dir("pose_io");
  std::string path = (dir / "poses.txt").string();

  std::vector<Pose> poses;
  Pose p0;  // identity
  poses.push_back(p0);
  Pose p1;
  p1.translation = Vec3(1.5, -2.25, 3.75);
  poses.push_back(p1);
  Pose p2;
  double angle = 0.7;
  p2.rotation = Eigen::AngleAxisd(angle, Vec3(1, 2, 2).normalized()).toRotationMatrix();
  p2.translation = Vec3(-4, 0.5, 9);
  poses.push_back(p2);

  write_poses(path, poses);
  auto back = read_poses(path);
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK((back[i].rotation - poses[i].rotation).norm() < 1e-9);
    CHECK((back[i].translation - poses[i].translation).norm() < 1e-9);
  }
}

TEST_CASE("pose parsing errors carry line numbers") {
  auto dir = oracle::test_dir("pose_bad");
  std::string path = (dir / "poses.txt").string();
  std::ofstream(path) << "1 0 0 0 0 1 0 0 0 0 1 0\n"
                      << "1 0 0 0 0 1 0\n";
  CHECK_THROWS_WITH_AS(read_poses(path), doctest::Contains("2"), FormatError);

  std::ofstream(path) << "1 0 0 0 0 1 0 0 0 0 1 0 extra\n";
  CHECK_THROWS_AS(read_poses(path), FormatError);

  // A matrix that is far from orthonormal is rejected.
  std::ofstream(path) << "2 0 0 0 0 1 0 0 0 0 1 0\n";
  CHECK_THROWS_AS(read_poses(path), FormatError);

  CHECK_THROWS_AS(read_poses((dir / "missing.txt").string()), FormatError);
}

TEST_CASE("to_world applies the rigid transform and range filter") {
  Pose pose;
  pose.rotation = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
  pose.translation = Vec3(10, 0, 0);

  std::vector<Vec3> raw = {Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(100, 0, 0)};
  Scan scan = to_world(raw, pose, 50.0);
  CHECK(scan.sensor_origin == pose.translation);
  REQUIRE(scan.points.size() == 2);  // far point dropped by sensor-frame range
  CHECK((scan.points[0] - Vec3(10, 1, 0)).norm() < 1e-12);
  CHECK((scan.points[1] - Vec3(8, 0, 0)).norm() < 1e-12);

  // max_range <= 0 disables filtering.
  CHECK(to_world(raw, pose, 0.0).points.size() == 3);

  // Rigidity: pairwise distances preserved.
  Rng rng(3);
  std::vector<Vec3> cloud;
  for (int i = 0; i < 50; ++i)
    cloud.push_back(Vec3(uniform_in(rng, -5, 5), uniform_in(rng, -5, 5),
                         uniform_in(rng, -5, 5)));
  Pose rp;
  rp.rotation =
      Eigen::AngleAxisd(1.234, Vec3(0.3, -0.5, 0.81).normalized()).toRotationMatrix();
  rp.translation = Vec3(3, 4, 5);
  Scan world = to_world(cloud, rp, 0.0);
  for (size_t i = 1; i < cloud.size(); ++i) {
    double before = (cloud[i] - cloud[0]).norm();
    double after = (world.points[i] - world.points[0]).norm();
    CHECK(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("voxel_downsample keeps the first point per voxel in order") {
  std::vector<Vec3> pts = {Vec3(0.01, 0.01, 0.01), Vec3(0.02, 0.02, 0.02),
                           Vec3(0.95, 0.01, 0.01), Vec3(0.03, 0.01, 0.02),
                           Vec3(-0.4, 0, 0)};
  auto down = voxel_downsample(pts, 0.5);
  REQUIRE(down.size() == 3);
  CHECK(down[0] == pts[0]);
  CHECK(down[1] == pts[2]);
  CHECK(down[2] == pts[4]);
  CHECK_THROWS_AS(voxel_downsample(pts, 0.0), ArgumentError);

  // Disabled-by-zero is handled by the caller; negative coordinates bucket
  // correctly (floor semantics, no mirror duplication around zero).
  std::vector<Vec3> mirror = {Vec3(-0.1, 0, 0), Vec3(0.1, 0, 0)};
  CHECK(voxel_downsample(mirror, 0.5).size() == 2);
}

TEST_CASE("read_scan_ply returns vertices only") {
  auto dir = oracle::test_dir("ply_scan");
  std::string path = (dir / "cloud.ply").string();
  std::ofstream(path) << "ply\nformat ascii 1.0\nelement vertex 2\nproperty "
                         "float x\nproperty float y\nproperty float "
                         "z\nend_header\n1 2 3\n4 5 6\n";
  auto pts = read_scan_ply(path);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1] == Vec3(4, 5, 6));
}
