#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sdfmap/pipeline.hpp"
#include "sdfmap/synthetic.hpp"

using namespace sdfmap;

TEST_CASE("sphere scene endpoints lie on the sphere") {
  double radius = 1.7;
  SyntheticScene scene = make_sphere_scene(radius, 12, 300, 5);
  CHECK(scene.poses.size() == 12);
  REQUIRE(scene.scans.size() == 12);
  CHECK(!scene.gt_mesh.triangles.empty());

  size_t total = 0;
  for (size_t s = 0; s < scene.scans.size(); ++s) {
    const Pose& pose = scene.poses[s];
    CHECK(std::abs(pose.translation.norm() - 2 * radius) < 1e-9);
    CHECK(scene.scans[s].size() == 300);  // every beam hits
    for (const Vec3& p : scene.scans[s]) {
      Vec3 world = pose.rotation * p + pose.translation;
      CHECK(std::abs(world.norm() - radius) < 1e-9);
      ++total;
    }
  }
  CHECK(total == 12 * 300);

  // Ground-truth mesh vertices lie on the sphere too.
  for (const Vec3& v : scene.gt_mesh.vertices)
    CHECK(std::abs(v.norm() - radius) < 1e-6);
}

TEST_CASE("sphere scene is deterministic in the seed") {
  SyntheticScene a = make_sphere_scene(2.0, 4, 50, 9);
  SyntheticScene b = make_sphere_scene(2.0, 4, 50, 9);
  SyntheticScene c = make_sphere_scene(2.0, 4, 50, 10);
  REQUIRE(a.scans.size() == b.scans.size());
  bool all_equal = true;
  for (size_t s = 0; s < a.scans.size(); ++s)
    for (size_t i = 0; i < a.scans[s].size(); ++i)
      if (a.scans[s][i] != b.scans[s][i]) all_equal = false;
  CHECK(all_equal);
  bool any_differs = false;
  for (size_t i = 0; i < a.scans[0].size(); ++i)
    if (a.scans[0][i] != c.scans[0][i]) any_differs = true;
  CHECK(any_differs);
}

TEST_CASE("room scene endpoints lie on wall planes") {
  double scale = 3.0;
  SyntheticScene scene = make_room_scene(scale, 6, 400, 3);
  REQUIRE(scene.scans.size() == 6);
  size_t checked = 0;
  for (size_t s = 0; s < scene.scans.size(); ++s) {
    const Pose& pose = scene.poses[s];
    for (const Vec3& p : scene.scans[s]) {
      Vec3 w = pose.rotation * p + pose.translation;
      // Box: x in [-1.6s, 1.6s], y in [-1.2s, 1.2s], z in [0, 1.2s].
      double ex = 1.6 * scale, ey = 1.2 * scale, ez = 1.2 * scale;
      double hx = std::min(std::abs(w.x() - ex), std::abs(w.x() + ex));
      double hy = std::min(std::abs(w.y() - ey), std::abs(w.y() + ey));
      double hz = std::min(std::abs(w.z() - ez), std::abs(w.z()));
      CHECK(std::min({hx, hy, hz}) < 1e-9);
      CHECK(std::abs(w.x()) < ex + 1e-9);
      CHECK(std::abs(w.y()) < ey + 1e-9);
      CHECK(w.z() > -1e-9);
      CHECK(w.z() < ez + 1e-9);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("two region scene separates phases at the split plane") {
  SyntheticScene scene = make_two_region_scene(10, 500, 21);
  REQUIRE(scene.scans.size() == 10);
  REQUIRE(scene.poses.size() == 10);
  CHECK(!scene.gt_region_a.triangles.empty());
  CHECK(!scene.gt_region_b.triangles.empty());

  for (size_t s = 0; s < scene.scans.size(); ++s) {
    bool phase_a = s < 5;
    const Pose& pose = scene.poses[s];
    CHECK(!scene.scans[s].empty());
    for (const Vec3& p : scene.scans[s]) {
      Vec3 w = pose.rotation * p + pose.translation;
      if (phase_a)
        CHECK(w.x() <= -kTwoRegionSplit + 1e-12);
      else
        CHECK(w.x() >= kTwoRegionSplit - 1e-12);
    }
  }

  // Per-region ground truth stays on its side of the cull margin.
  for (const Vec3& v : scene.gt_region_a.vertices)
    CHECK(v.x() <= -kTwoRegionSplit + 1e-9);
  for (const Vec3& v : scene.gt_region_b.vertices)
    CHECK(v.x() >= kTwoRegionSplit - 1e-9);
}

TEST_CASE("write_scene then load_scans roundtrips within float32") {
  auto dir = oracle::test_dir("scene_io");
  SyntheticScene scene = make_sphere_scene(1.5, 5, 80, 4);
  write_scene(scene, dir.string());

  CHECK(std::filesystem::exists(dir / "poses.txt"));
  CHECK(std::filesystem::exists(dir / "gt_mesh.ply"));
  CHECK(std::filesystem::exists(dir / "scans" / "000000.bin"));
  CHECK(std::filesystem::exists(dir / "scans" / "000004.bin"));

  RunConfig config;
  config.scan_dir = (dir / "scans").string();
  config.pose_file = (dir / "poses.txt").string();
  config.max_range = 0.0;
  std::vector<Scan> scans = load_scans(config);
  REQUIRE(scans.size() == 5);
  for (size_t s = 0; s < scans.size(); ++s) {
    CHECK(scans[s].source_index == s);
    CHECK((scans[s].sensor_origin - scene.poses[s].translation).norm() < 1e-9);
    REQUIRE(scans[s].points.size() == scene.scans[s].size());
    for (size_t i = 0; i < scans[s].points.size(); ++i) {
      Vec3 exact = scene.poses[s].rotation * scene.scans[s][i] +
                   scene.poses[s].translation;
      // One float32 quantization in the sensor frame, then a double rigid
      // transform on load.
      CHECK((scans[s].points[i] - exact).norm() < 1e-5);
    }
  }

  // Endpoint count respects a max-range filter.
  config.max_range = 1.0;  // sensors sit 3m from the sphere surface
  for (const Scan& s : load_scans(config)) CHECK(s.points.empty());
}
