#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sdfmap/errors.hpp"
#include "sdfmap/evaluator.hpp"
#include "sdfmap/rng.hpp"

using namespace sdfmap;

namespace {

std::vector<Vec3> random_cloud(Rng& rng, size_t n, double extent) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (size_t i = 0; i < n; ++i)
    pts.push_back(Vec3(uniform_in(rng, -extent, extent),
                       uniform_in(rng, -extent, extent),
                       uniform_in(rng, -extent, extent)));
  return pts;
}

TriangleMesh two_triangle_mesh() {
  // One unit right triangle in z=0, one three times its area.
  TriangleMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                   Vec3(10, 0, 0), Vec3(13, 0, 0), Vec3(10, 2, 0)};
  mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
  return mesh;
}

}  // namespace

TEST_CASE("kd tree equals brute force exactly") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    size_t n_to = 1 + uniform_index(rng, 400);
    size_t n_from = 1 + uniform_index(rng, 200);
    auto to = random_cloud(rng, n_to, 5.0);
    auto from = random_cloud(rng, n_from, 6.0);
    auto fast = nn_distances(from, to);
    auto slow = nn_distances_brute(from, to);
    REQUIRE(fast.size() == slow.size());
    for (size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == slow[i]);
  }
}

TEST_CASE("kd tree handles degenerate clouds") {
  // Duplicates, collinear points, a single point.
  std::vector<Vec3> to = {Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(2, 1, 1),
                          Vec3(3, 1, 1), Vec3(4, 1, 1)};
  KdTree tree(to);
  CHECK(tree.nearest_sq(Vec3(1, 1, 1)) == 0.0);
  CHECK(tree.nearest_sq(Vec3(5, 1, 1)) == 1.0);

  KdTree single({Vec3(0, 3, 4)});
  CHECK(single.nearest_sq(Vec3::Zero()) == 25.0);

  CHECK_THROWS_AS(KdTree({}), ArgumentError);
  CHECK_THROWS_AS(nn_distances({Vec3::Zero()}, {}), ArgumentError);
  CHECK(nn_distances({}, {Vec3::Zero()}).empty());
}

TEST_CASE("nearest distance on a 3-4-5 configuration") {
  std::vector<Vec3> to = {Vec3(3, 4, 0), Vec3(100, 0, 0)};
  auto d = nn_distances({Vec3(0, 0, 0)}, to);
  REQUIRE(d.size() == 1);
  CHECK(d[0] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("surface sampling is area weighted and stays on the mesh") {
  TriangleMesh mesh = two_triangle_mesh();
  const size_t n = 40000;
  auto pts = sample_surface(mesh, n, 7);
  REQUIRE(pts.size() == n);

  size_t on_big = 0;
  for (const auto& p : pts) {
    CHECK(p.z() == 0.0);
    if (p.x() >= 9.0) {
      ++on_big;
      // Inside the big triangle: x in [10,13], y >= 0, below hypotenuse.
      CHECK(p.x() >= 10.0 - 1e-12);
      CHECK(p.y() >= -1e-12);
      CHECK((p.x() - 10.0) / 3.0 + p.y() / 2.0 <= 1.0 + 1e-12);
    } else {
      CHECK(p.x() >= -1e-12);
      CHECK(p.y() >= -1e-12);
      CHECK(p.x() + p.y() <= 1.0 + 1e-12);
    }
  }
  // Areas 0.5 and 3.0: expect 6/7 of samples on the big one, binomial 4-sigma.
  double expect = n * (3.0 / 3.5);
  double sigma = std::sqrt(n * (3.0 / 3.5) * (0.5 / 3.5));
  CHECK(std::abs(double(on_big) - expect) < 4 * sigma);

  // Deterministic in the seed.
  auto again = sample_surface(mesh, 100, 7);
  auto first100 = sample_surface(mesh, 100, 7);
  for (size_t i = 0; i < 100; ++i) CHECK(again[i] == first100[i]);
  auto other = sample_surface(mesh, 100, 8);
  bool differs = false;
  for (size_t i = 0; i < 100; ++i)
    if (other[i] != again[i]) differs = true;
  CHECK(differs);

  TriangleMesh empty;
  CHECK_THROWS_AS(sample_surface(empty, 10, 1), ArgumentError);
  TriangleMesh degenerate;
  degenerate.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  degenerate.triangles = {{0, 1, 2}};
  CHECK_THROWS_AS(sample_surface(degenerate, 10, 1), ArgumentError);
}

TEST_CASE("report on identical clouds is perfect") {
  Rng rng(5);
  auto cloud = random_cloud(rng, 500, 2.0);
  ReconReport r = compute_report(cloud, cloud, {}, 0.1);
  CHECK(r.chamfer_l1_cm == 0.0);
  CHECK(r.completion_cm == 0.0);
  CHECK(r.accuracy_cm == 0.0);
  CHECK(r.completion_ratio_pct == 100.0);
  CHECK(r.precision_pct == 100.0);
  CHECK(r.f_score_pct == 100.0);
  CHECK(r.pred_count == 500);
  CHECK(r.gt_count == 500);
  CHECK(r.tau_cm == doctest::Approx(10.0));
}

TEST_CASE("report under a uniform shift") {
  // A dense plane grid shifted normally by delta: every nn distance is
  // exactly delta (grid pitch 0.05 << extent, interior dominated).
  std::vector<Vec3> gt;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) gt.push_back(Vec3(i * 0.05, j * 0.05, 0));

  double tau = 0.1;
  auto shifted = [&](double delta) {
    std::vector<Vec3> out = gt;
    for (auto& p : out) p.z() += delta;
    return out;
  };

  // Shift tau/2: all matched, chamfer = tau/2 in cm.
  ReconReport half = compute_report(shifted(tau / 2), gt, {}, tau);
  CHECK(half.completion_ratio_pct == 100.0);
  CHECK(half.precision_pct == 100.0);
  CHECK(half.chamfer_l1_cm == doctest::Approx(100.0 * tau / 2).epsilon(1e-9));
  CHECK(half.f_score_pct == doctest::Approx(100.0));

  // Shift 2*tau: nothing matched.
  ReconReport far = compute_report(shifted(2 * tau), gt, {}, tau);
  CHECK(far.completion_ratio_pct == 0.0);
  CHECK(far.precision_pct == 0.0);
  CHECK(far.f_score_pct == 0.0);
  CHECK(far.chamfer_l1_cm == doctest::Approx(100.0 * 2 * tau).epsilon(1e-9));
}

TEST_CASE("gt mask redirects only the accuracy direction") {
  // gt covers a segment; pred extends beyond it into territory that only the
  // mask covers. Against gt alone the extra points look wrong; the mask
  // absolves them without changing the completion direction.
  std::vector<Vec3> gt, pred, mask;
  for (int i = 0; i <= 100; ++i) gt.push_back(Vec3(i * 0.01, 0, 0));
  for (int i = 0; i <= 200; ++i) pred.push_back(Vec3(i * 0.01, 0, 0));
  for (int i = 0; i <= 300; ++i) mask.push_back(Vec3(i * 0.01, 0, 0));

  ReconReport no_mask = compute_report(pred, gt, {}, 0.05);
  ReconReport with_mask = compute_report(pred, gt, mask, 0.05);

  CHECK(no_mask.accuracy_cm > 10.0);
  CHECK(with_mask.accuracy_cm == 0.0);
  CHECK(with_mask.precision_pct == 100.0);
  CHECK(no_mask.precision_pct < 60.0);
  CHECK(with_mask.completion_cm == no_mask.completion_cm);
  CHECK(with_mask.completion_ratio_pct == no_mask.completion_ratio_pct);
  CHECK(with_mask.completion_ratio_pct == 100.0);
}

TEST_CASE("report validation and formatting") {
  std::vector<Vec3> cloud = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS_AS(compute_report(cloud, cloud, {}, 0.0), ArgumentError);
  CHECK_THROWS_AS(compute_report(cloud, cloud, {}, -1.0), ArgumentError);
  CHECK_THROWS_AS(compute_report({}, cloud, {}, 0.1), ArgumentError);
  CHECK_THROWS_AS(compute_report(cloud, {}, {}, 0.1), ArgumentError);

  ReconReport r = compute_report(cloud, cloud, {}, 0.1);
  std::string header = report_csv_header();
  std::string row = report_csv_row(r);
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
  CHECK(header.find("chamfer") != std::string::npos);
  CHECK(report_table(r).find("100") != std::string::npos);
}

TEST_CASE("f score is the harmonic mean of the two percentages") {
  // Construct one direction perfect, the other half-matched.
  std::vector<Vec3> gt = {Vec3(0, 0, 0), Vec3(10, 0, 0)};
  std::vector<Vec3> pred = {Vec3(0, 0, 0)};
  ReconReport r = compute_report(pred, gt, {}, 0.1);
  CHECK(r.precision_pct == 100.0);
  CHECK(r.completion_ratio_pct == 50.0);
  CHECK(r.f_score_pct == doctest::Approx(2 * 100.0 * 50.0 / 150.0));
}
