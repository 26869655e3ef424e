#include "sdfmap/evaluator.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sdfmap/errors.hpp"
#include "sdfmap/rng.hpp"

namespace sdfmap {

namespace {
constexpr uint32_t kLeafSize = 16;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw ArgumentError("kd-tree: empty point set");
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, uint32_t(points_.size()));
}

uint32_t KdTree::build(uint32_t begin, uint32_t end) {
  uint32_t id = uint32_t(nodes_.size());
  nodes_.push_back({});
  Aabb bounds;
  for (uint32_t i = begin; i < end; ++i) bounds.extend(points_[i]);
  nodes_[id].bounds = bounds;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  // Split at the median of the widest axis.
  Vec3 extent = bounds.extent();
  int axis = 0;
  if (extent[1] > extent[axis]) axis = 1;
  if (extent[2] > extent[axis]) axis = 2;
  uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid,
                   points_.begin() + end,
                   [axis](const Vec3& a, const Vec3& b) {
                     return a[axis] < b[axis];
                   });
  double split = points_[mid][axis];

  uint32_t left = build(begin, mid);
  uint32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(uint32_t node_id, const Vec3& q, double& best_sq) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (uint32_t i = node.begin; i < node.end; ++i) {
      double d = (points_[i] - q).squaredNorm();
      if (d < best_sq) best_sq = d;
    }
    return;
  }
  double delta = q[node.axis] - node.split;
  uint32_t near = delta < 0.0 ? node.left : node.right;
  uint32_t far = delta < 0.0 ? node.right : node.left;
  search(near, q, best_sq);
  // The far side can only help if the splitting plane is closer than the
  // best distance found so far.
  if (delta * delta < best_sq) search(far, q, best_sq);
}

double KdTree::nearest_sq(const Vec3& query) const {
  double best = std::numeric_limits<double>::infinity();
  search(root_, query, best);
  return best;
}

std::vector<double> nn_distances(const std::vector<Vec3>& from,
                                 const std::vector<Vec3>& to) {
  if (from.empty()) return {};
  if (to.empty()) throw ArgumentError("nn_distances: empty target cloud");
  KdTree tree(to);
  std::vector<double> out(from.size());
  for (size_t i = 0; i < from.size(); ++i)
    out[i] = std::sqrt(tree.nearest_sq(from[i]));
  return out;
}

std::vector<double> nn_distances_brute(const std::vector<Vec3>& from,
                                       const std::vector<Vec3>& to) {
  if (from.empty()) return {};
  if (to.empty()) throw ArgumentError("nn_distances: empty target cloud");
  std::vector<double> out(from.size());
  for (size_t i = 0; i < from.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& t : to) {
      double d = (t - from[i]).squaredNorm();
      if (d < best) best = d;
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, size_t n_points,
                                 uint64_t seed) {
  if (mesh.triangles.empty())
    throw ArgumentError("sample_surface: mesh has no triangles");
  if (n_points < 1) throw ArgumentError("sample_surface: n_points must be >= 1");

  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative[i] = total;
  }
  if (!(total > 0.0))
    throw ArgumentError("sample_surface: mesh has zero area");

  Rng rng(derive_seed(seed, 0x5a3f1eull));
  std::vector<Vec3> out;
  out.reserve(n_points);
  for (size_t i = 0; i < n_points; ++i) {
    double pick = uniform_in(rng, 0.0, total);
    size_t tri = size_t(std::lower_bound(cumulative.begin(), cumulative.end(),
                                         pick) -
                        cumulative.begin());
    if (tri >= mesh.triangles.size()) tri = mesh.triangles.size() - 1;
    const auto& t = mesh.triangles[tri];
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    // Square-root trick for uniform barycentric coordinates.
    double r1 = std::sqrt(uniform_double(rng));
    double r2 = uniform_double(rng);
    out.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
  }
  return out;
}

ReconReport compute_report(const std::vector<Vec3>& pred,
                           const std::vector<Vec3>& gt,
                           const std::vector<Vec3>& gt_mask, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("compute_report: tau must be positive");
  if (pred.empty()) throw ArgumentError("compute_report: empty prediction");
  if (gt.empty()) throw ArgumentError("compute_report: empty ground truth");

  std::vector<double> gt_to_pred = nn_distances(gt, pred);
  std::vector<double> pred_to_gt =
      nn_distances(pred, gt_mask.empty() ? gt : gt_mask);

  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  };
  auto ratio_within = [tau](const std::vector<double>& v) {
    size_t n = 0;
    for (double d : v)
      if (d <= tau) ++n;
    return 100.0 * double(n) / double(v.size());
  };

  ReconReport r;
  r.completion_cm = 100.0 * mean(gt_to_pred);
  r.accuracy_cm = 100.0 * mean(pred_to_gt);
  r.chamfer_l1_cm = 0.5 * (r.completion_cm + r.accuracy_cm);
  r.completion_ratio_pct = ratio_within(gt_to_pred);
  r.precision_pct = ratio_within(pred_to_gt);
  r.f_score_pct =
      r.precision_pct + r.completion_ratio_pct > 0.0
          ? 2.0 * r.precision_pct * r.completion_ratio_pct /
                (r.precision_pct + r.completion_ratio_pct)
          : 0.0;
  r.tau_cm = 100.0 * tau;
  r.pred_count = pred.size();
  r.gt_count = gt.size();
  return r;
}

std::string report_csv_header() {
  return "completion_cm,accuracy_cm,chamfer_l1_cm,completion_ratio_pct,"
         "precision_pct,f_score_pct,tau_cm,pred_count,gt_count";
}

std::string report_csv_row(const ReconReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%zu,%zu",
                r.completion_cm, r.accuracy_cm, r.chamfer_l1_cm,
                r.completion_ratio_pct, r.precision_pct, r.f_score_pct,
                r.tau_cm, r.pred_count, r.gt_count);
  return buf;
}

std::string report_table(const ReconReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "completion        %8.3f cm\n"
                "accuracy          %8.3f cm\n"
                "chamfer_l1        %8.3f cm\n"
                "completion_ratio  %8.2f %% (tau = %.1f cm)\n"
                "precision         %8.2f %%\n"
                "f_score           %8.2f %%\n"
                "points            pred %zu, gt %zu\n",
                r.completion_cm, r.accuracy_cm, r.chamfer_l1_cm,
                r.completion_ratio_pct, r.tau_cm, r.precision_pct,
                r.f_score_pct, r.pred_count, r.gt_count);
  return buf;
}

}  // namespace sdfmap
