#include "sdfmap/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdfmap/errors.hpp"
#include "sdfmap/rng.hpp"

namespace sdfmap {

namespace {

constexpr double kGoldenAngle = 2.399963229728653;

Vec3 random_unit(Rng& rng) {
  while (true) {
    Vec3 v(uniform_in(rng, -1.0, 1.0), uniform_in(rng, -1.0, 1.0),
           uniform_in(rng, -1.0, 1.0));
    double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

// Rotation whose x axis points along `forward` (world frame).
Eigen::Matrix3d look_rotation(const Vec3& forward) {
  Vec3 x = forward.normalized();
  Vec3 up = std::abs(x[2]) > 0.99 ? Vec3(1, 0, 0) : Vec3(0, 0, 1);
  Vec3 y = up.cross(x).normalized();
  Vec3 z = x.cross(y);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

Vec3 to_sensor(const Pose& pose, const Vec3& p_world) {
  return pose.rotation.transpose() * (p_world - pose.translation);
}

// Axis-aligned rectangle: the plane coordinate is exact, the other two run
// over [lo, hi].
struct Rect {
  int axis;
  double plane;
  int u_axis, v_axis;
  double u_lo, u_hi, v_lo, v_hi;
};

// First hit along origin + t*dir over a rectangle soup; the hit point's
// plane coordinate is snapped exactly.
bool raycast_rects(const std::vector<Rect>& rects, const Vec3& origin,
                   const Vec3& dir, Vec3& hit) {
  double best_t = std::numeric_limits<double>::infinity();
  const Rect* best = nullptr;
  for (const Rect& r : rects) {
    double denom = dir[r.axis];
    if (std::abs(denom) < 1e-12) continue;
    double t = (r.plane - origin[r.axis]) / denom;
    if (t <= 1e-9 || t >= best_t) continue;
    double u = origin[r.u_axis] + t * dir[r.u_axis];
    double v = origin[r.v_axis] + t * dir[r.v_axis];
    if (u < r.u_lo || u > r.u_hi || v < r.v_lo || v > r.v_hi) continue;
    best_t = t;
    best = &r;
  }
  if (!best) return false;
  hit = origin + best_t * dir;
  hit[best->axis] = best->plane;
  return true;
}

void add_rect_mesh(TriangleMesh& mesh, const Rect& r, double du, double dv,
                   bool flip) {
  // Subdivide so surface sampling and nearest-neighbor tests see a uniform
  // vertex density rather than four huge triangles.
  int nu = std::max(1, int(std::ceil((r.u_hi - r.u_lo) / du)));
  int nv = std::max(1, int(std::ceil((r.v_hi - r.v_lo) / dv)));
  uint32_t base = uint32_t(mesh.vertices.size());
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) {
      Vec3 p;
      p[r.axis] = r.plane;
      p[r.u_axis] = r.u_lo + (r.u_hi - r.u_lo) * double(i) / nu;
      p[r.v_axis] = r.v_lo + (r.v_hi - r.v_lo) * double(j) / nv;
      mesh.vertices.push_back(p);
    }
  }
  auto at = [&](int i, int j) { return base + uint32_t(j * (nu + 1) + i); };
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      uint32_t a = at(i, j), b = at(i + 1, j), c = at(i + 1, j + 1),
               d = at(i, j + 1);
      if (flip) {
        mesh.triangles.push_back({a, c, b});
        mesh.triangles.push_back({a, d, c});
      } else {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      }
    }
  }
}

TriangleMesh uv_sphere_mesh(double radius, int rings, int segments) {
  TriangleMesh mesh;
  mesh.vertices.emplace_back(0, 0, radius);
  for (int r = 1; r < rings; ++r) {
    double polar = M_PI * double(r) / rings;
    for (int s = 0; s < segments; ++s) {
      double az = 2.0 * M_PI * double(s) / segments;
      mesh.vertices.emplace_back(radius * std::sin(polar) * std::cos(az),
                                 radius * std::sin(polar) * std::sin(az),
                                 radius * std::cos(polar));
    }
  }
  mesh.vertices.emplace_back(0, 0, -radius);
  uint32_t south = uint32_t(mesh.vertices.size() - 1);
  auto ring_at = [&](int r, int s) {
    return uint32_t(1 + (r - 1) * segments + (s % segments));
  };
  for (int s = 0; s < segments; ++s)
    mesh.triangles.push_back({0, ring_at(1, s), ring_at(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      uint32_t a = ring_at(r, s), b = ring_at(r, s + 1);
      uint32_t c = ring_at(r + 1, s + 1), d = ring_at(r + 1, s);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  for (int s = 0; s < segments; ++s)
    mesh.triangles.push_back({ring_at(rings - 1, s + 1), ring_at(rings - 1, s),
                              south});
  return mesh;
}

}  // namespace

SyntheticScene make_sphere_scene(double radius, int scan_count,
                                 int beams_per_scan, uint64_t seed) {
  if (!(radius > 0.0)) throw ArgumentError("sphere scene: radius must be positive");
  SyntheticScene scene;
  double sensor_dist = 2.0 * radius;

  for (int s = 0; s < scan_count; ++s) {
    // Spiral over the viewing sphere: even polar coverage, golden-angle
    // azimuths so consecutive scans look from well-separated directions.
    double cos_polar = scan_count > 1
                           ? -0.9 + 1.8 * (double(s) + 0.5) / scan_count
                           : 0.0;
    double sin_polar = std::sqrt(std::max(0.0, 1.0 - cos_polar * cos_polar));
    double az = double(s) * kGoldenAngle;
    Vec3 sensor = sensor_dist * Vec3(sin_polar * std::cos(az),
                                     sin_polar * std::sin(az), cos_polar);
    Pose pose;
    pose.rotation = look_rotation(-sensor);
    pose.translation = sensor;

    Rng rng(derive_seed(seed, 0x5e75ull, uint64_t(s)));
    std::vector<Vec3> points;
    points.reserve(beams_per_scan);
    for (int b = 0; b < beams_per_scan; ++b) {
      Vec3 u = random_unit(rng);
      // Aim at a point on the near hemisphere so every beam hits.
      if (u.dot(sensor) < 0.0) u = -u;
      Vec3 dir = (radius * u - sensor).normalized();
      // Nearest root of |sensor + t*dir|^2 = radius^2.
      double b2 = dir.dot(sensor);
      double disc = b2 * b2 - (sensor.squaredNorm() - radius * radius);
      if (disc < 0.0) continue;  // numerically grazing; drop the beam
      double t = -b2 - std::sqrt(disc);
      if (t <= 0.0) continue;
      points.push_back(to_sensor(pose, sensor + t * dir));
    }
    scene.poses.push_back(pose);
    scene.scans.push_back(std::move(points));
  }

  scene.gt_mesh = uv_sphere_mesh(radius, 64, 128);
  std::ostringstream desc;
  desc << "scene = sphere\nradius = " << radius
       << "\nsensor_distance = " << sensor_dist
       << "\nscans = " << scan_count << "\nbeams_per_scan = " << beams_per_scan
       << "\nseed = " << seed << "\n";
  scene.description = desc.str();
  return scene;
}

SyntheticScene make_room_scene(double scale, int scan_count,
                               int beams_per_scan, uint64_t seed) {
  if (!(scale > 0.0)) throw ArgumentError("room scene: scale must be positive");
  SyntheticScene scene;
  double hx = 1.6 * scale, hy = 1.2 * scale, hz = 1.2 * scale;

  std::vector<Rect> rects = {
      {2, 0.0, 0, 1, -hx, hx, -hy, hy},   // floor
      {2, hz, 0, 1, -hx, hx, -hy, hy},    // ceiling
      {0, -hx, 1, 2, -hy, hy, 0.0, hz},   // walls
      {0, hx, 1, 2, -hy, hy, 0.0, hz},
      {1, -hy, 0, 2, -hx, hx, 0.0, hz},
      {1, hy, 0, 2, -hx, hx, 0.0, hz},
  };

  double ring = 0.5 * scale;
  for (int s = 0; s < scan_count; ++s) {
    double az = 2.0 * M_PI * double(s) / std::max(1, scan_count);
    Vec3 sensor(ring * std::cos(az), ring * std::sin(az), 0.5 * hz);
    Pose pose;
    pose.rotation = look_rotation(Vec3(std::cos(az), std::sin(az), 0.0));
    pose.translation = sensor;

    Rng rng(derive_seed(seed, 0x400ull, uint64_t(s)));
    std::vector<Vec3> points;
    points.reserve(beams_per_scan);
    for (int b = 0; b < beams_per_scan; ++b) {
      Vec3 hit;
      if (raycast_rects(rects, sensor, random_unit(rng), hit))
        points.push_back(to_sensor(pose, hit));
    }
    scene.poses.push_back(pose);
    scene.scans.push_back(std::move(points));
  }

  double grid = 0.4 * scale;
  for (const Rect& r : rects) add_rect_mesh(scene.gt_mesh, r, grid, grid, false);
  std::ostringstream desc;
  desc << "scene = room\nhalf_extent_x = " << hx << "\nhalf_extent_y = " << hy
       << "\nheight = " << hz << "\nscans = " << scan_count
       << "\nbeams_per_scan = " << beams_per_scan << "\nseed = " << seed
       << "\n";
  scene.description = desc.str();
  return scene;
}

SyntheticScene make_two_region_scene(int scan_count, int beams_per_scan,
                                     uint64_t seed) {
  SyntheticScene scene;
  // Corridor x in [-4,4], y in [-2,2], ceiling 2.5. Region A keeps the
  // floor at 0; region B's floor is raised to 0.6 with a riser at x = 0.
  const double x0 = -4.0, x1 = 4.0, hy = 2.0, ceil_z = 2.5, step_z = 0.6;

  std::vector<Rect> rects = {
      {2, 0.0, 0, 1, x0, 0.0, -hy, hy},      // floor A
      {2, step_z, 0, 1, 0.0, x1, -hy, hy},   // floor B
      {0, 0.0, 1, 2, -hy, hy, 0.0, step_z},  // riser
      {2, ceil_z, 0, 1, x0, x1, -hy, hy},    // ceiling
      {0, x0, 1, 2, -hy, hy, 0.0, ceil_z},   // end wall A
      {0, x1, 1, 2, -hy, hy, step_z, ceil_z},  // end wall B
      {1, -hy, 0, 2, x0, x1, 0.0, ceil_z},   // side walls
      {1, hy, 0, 2, x0, x1, 0.0, ceil_z},
  };

  int a_scans = (scan_count + 1) / 2;
  int b_scans = scan_count - a_scans;
  for (int s = 0; s < scan_count; ++s) {
    bool region_a = s < a_scans;
    int local = region_a ? s : s - a_scans;
    int local_count = region_a ? a_scans : b_scans;
    double frac = local_count > 1 ? double(local) / (local_count - 1) : 0.5;
    double sx = region_a ? -3.2 + 2.4 * frac : 0.8 + 2.4 * frac;
    Vec3 sensor(sx, 0.0, 1.5);
    Pose pose;
    pose.rotation = look_rotation(Vec3(region_a ? -1.0 : 1.0, 0.0, 0.0));
    pose.translation = sensor;

    Rng rng(derive_seed(seed, 0x2e61ull, uint64_t(s)));
    std::vector<Vec3> points;
    points.reserve(beams_per_scan);
    for (int b = 0; b < beams_per_scan; ++b) {
      Vec3 hit;
      if (!raycast_rects(rects, sensor, random_unit(rng), hit)) continue;
      // Keep each phase's supervision strictly inside its own half so the
      // later phase never re-observes what the earlier one learned.
      if (region_a ? hit[0] > -kTwoRegionSplit : hit[0] < kTwoRegionSplit)
        continue;
      points.push_back(to_sensor(pose, hit));
    }
    scene.poses.push_back(pose);
    scene.scans.push_back(std::move(points));
  }

  double grid = 0.4;
  for (const Rect& r : rects) add_rect_mesh(scene.gt_mesh, r, grid, grid, false);

  auto clipped = [&](double lo, double hi) {
    TriangleMesh mesh;
    for (Rect r : rects) {
      if (r.axis == 0) {
        if (r.plane < lo || r.plane > hi) continue;
      } else {
        // Every non-x-plane rect runs x along its u coordinate.
        r.u_lo = std::max(r.u_lo, lo);
        r.u_hi = std::min(r.u_hi, hi);
        if (r.u_lo >= r.u_hi) continue;
      }
      add_rect_mesh(mesh, r, grid, grid, false);
    }
    return mesh;
  };
  scene.gt_region_a = clipped(x0, -kTwoRegionSplit);
  scene.gt_region_b = clipped(kTwoRegionSplit, x1);

  std::ostringstream desc;
  desc << "scene = two_region\ncorridor_x = [" << x0 << ", " << x1
       << "]\ncorridor_y = [" << -hy << ", " << hy << "]\nceiling = " << ceil_z
       << "\nstep_height = " << step_z << "\nsplit_margin = " << kTwoRegionSplit
       << "\nregion_a_scans = " << a_scans << "\nregion_b_scans = " << b_scans
       << "\nbeams_per_scan = " << beams_per_scan << "\nseed = " << seed
       << "\n";
  scene.description = desc.str();
  return scene;
}

void write_scene(const SyntheticScene& scene, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "scans");
  for (size_t i = 0; i < scene.scans.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.bin", i);
    write_scan_bin((fs::path(out_dir) / "scans" / name).string(),
                   scene.scans[i]);
  }
  write_poses((fs::path(out_dir) / "poses.txt").string(), scene.poses);
  write_mesh(scene.gt_mesh, (fs::path(out_dir) / "gt_mesh.ply").string(),
             MeshFormat::kPlyBinary);
  if (!scene.gt_region_a.triangles.empty())
    write_mesh(scene.gt_region_a,
               (fs::path(out_dir) / "gt_region_a.ply").string(),
               MeshFormat::kPlyBinary);
  if (!scene.gt_region_b.triangles.empty())
    write_mesh(scene.gt_region_b,
               (fs::path(out_dir) / "gt_region_b.ply").string(),
               MeshFormat::kPlyBinary);
  std::ofstream desc((fs::path(out_dir) / "scene.txt").string());
  desc << scene.description;
  if (!desc) throw FormatError("scene write: cannot write scene.txt");
}

}  // namespace sdfmap
