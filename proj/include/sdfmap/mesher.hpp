#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdfmap/decoder.hpp"
#include "sdfmap/feature_field.hpp"
#include "sdfmap/geometry.hpp"

namespace sdfmap {

namespace mc {
extern const uint16_t kEdgeTable[256];
extern const int8_t kTriTable[256][16];
}  // namespace mc

// Dense sampling of the field over a lattice. dims counts lattice points
// per axis; point (i,j,k) sits at origin + cell_size*(i,j,k).
struct SdfGrid {
  Vec3 origin = Vec3::Zero();
  double cell_size = 0.0;
  std::array<int, 3> dims = {0, 0, 0};
  std::vector<double> values;
  std::vector<uint8_t> valid;

  size_t index(int i, int j, int k) const {
    return size_t(i) + size_t(dims[0]) * (size_t(j) + size_t(dims[1]) * k);
  }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<uint32_t, 3>> triangles;
};

// Evaluate the composed field at every lattice point of the box. Lattice
// points where the field has no allocated cell are masked invalid.
SdfGrid query_grid(const FeatureField& field, const Decoder& decoder,
                   const Aabb& bbox, double cell_size);

// Standard 256-case extraction at the given isovalue. Cubes with any
// invalid corner emit nothing. Vertices are shared via a per-edge cache, so
// the mesh is watertight wherever the grid is fully valid. Triangles wind
// so outward normals point toward positive values.
TriangleMesh marching_cubes(const SdfGrid& grid, double iso = 0.0);

// query_grid + marching_cubes over the box in fixed-size blocks with a
// one-cell overlap, sharing the vertex cache across blocks. Bounded memory
// for large maps, identical output to a single dense pass.
TriangleMesh extract_mesh(const FeatureField& field, const Decoder& decoder,
                          const Aabb& bbox, double cell_size, double iso = 0.0,
                          int block_cells = 128);

enum class MeshFormat { kPlyBinary, kPlyAscii, kObj };

void write_mesh(const TriangleMesh& mesh, const std::string& path,
                MeshFormat format);

}  // namespace sdfmap
