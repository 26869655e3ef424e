#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <limits>

namespace sdfmap {

using Vec3 = Eigen::Vector3d;

struct Aabb {
  Vec3 min{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3 max{-std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  bool valid() const { return (min.array() <= max.array()).all(); }

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  void pad(double margin) {
    min.array() -= margin;
    max.array() += margin;
  }

  Vec3 extent() const { return max - min; }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

}  // namespace sdfmap
