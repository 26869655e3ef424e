#include "sdfmap/mesher.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "sdfmap/errors.hpp"

namespace sdfmap {

namespace {

// Corner c of the cube at (i,j,k) sits at (i,j,k) + kCornerOffset[c].
constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0},
                                     {0, 1, 0}, {0, 0, 1}, {1, 0, 1},
                                     {1, 1, 1}, {0, 1, 1}};

// Each of the 12 cube edges as (low corner, axis). The low corner is the
// edge endpoint with the smaller lattice coordinate, which makes the pair a
// grid-global identity for vertex sharing across cubes and blocks.
struct EdgeRef {
  int corner;
  int axis;
};
constexpr EdgeRef kEdgeRef[12] = {{0, 0}, {1, 1}, {3, 0}, {0, 1},
                                  {4, 0}, {5, 1}, {7, 0}, {4, 1},
                                  {0, 2}, {1, 2}, {2, 2}, {3, 2}};

using EdgeCache = std::unordered_map<uint64_t, uint32_t>;

// Run the table over every cube of `grid`, sharing vertices through
// `cache`. `gx,gy,gz` give the grid's lattice offset inside the global
// lattice of extent `gdims` with world origin `origin0`. Vertex positions
// are computed from global lattice indices so a blocked pass reproduces the
// dense pass bit for bit.
void polygonise(const SdfGrid& grid, double iso, int64_t gx, int64_t gy,
                int64_t gz, const std::array<int64_t, 3>& gdims,
                const Vec3& origin0, EdgeCache& cache, TriangleMesh& mesh) {
  auto global_edge_key = [&](int i, int j, int k, int axis) -> uint64_t {
    uint64_t flat = uint64_t(gx + i) +
                    uint64_t(gdims[0]) *
                        (uint64_t(gy + j) + uint64_t(gdims[1]) * uint64_t(gz + k));
    return flat * 3 + uint64_t(axis);
  };

  for (int k = 0; k + 1 < grid.dims[2]; ++k) {
    for (int j = 0; j + 1 < grid.dims[1]; ++j) {
      for (int i = 0; i + 1 < grid.dims[0]; ++i) {
        double v[8];
        int cube = 0;
        bool usable = true;
        for (int c = 0; c < 8; ++c) {
          size_t idx = grid.index(i + kCornerOffset[c][0],
                                  j + kCornerOffset[c][1],
                                  k + kCornerOffset[c][2]);
          if (!grid.valid[idx]) {
            usable = false;
            break;
          }
          v[c] = grid.values[idx];
          if (v[c] < iso) cube |= 1 << c;
        }
        if (!usable) continue;
        uint16_t edges = mc::kEdgeTable[cube];
        if (edges == 0) continue;

        uint32_t vert[12];
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const EdgeRef& er = kEdgeRef[e];
          int li = i + kCornerOffset[er.corner][0];
          int lj = j + kCornerOffset[er.corner][1];
          int lk = k + kCornerOffset[er.corner][2];
          uint64_t key = global_edge_key(li, lj, lk, er.axis);
          auto it = cache.find(key);
          if (it != cache.end()) {
            vert[e] = it->second;
            continue;
          }
          double v0 = grid.values[grid.index(li, lj, lk)];
          double v1 = grid.values[grid.index(li + (er.axis == 0),
                                             lj + (er.axis == 1),
                                             lk + (er.axis == 2))];
          double t = (iso - v0) / (v1 - v0);
          t = std::min(std::max(t, 0.0), 1.0);
          Vec3 p(double(gx + li), double(gy + lj), double(gz + lk));
          p[er.axis] += t;
          uint32_t idx = uint32_t(mesh.vertices.size());
          mesh.vertices.push_back(origin0 + grid.cell_size * p);
          cache.emplace(key, idx);
          vert[e] = idx;
        }

        const int8_t* tri = mc::kTriTable[cube];
        for (int n = 0; tri[n] != -1; n += 3) {
          // The table's winding faces the below-iso side; swap two indices
          // so outward normals point toward positive values.
          mesh.triangles.push_back(
              {vert[tri[n]], vert[tri[n + 2]], vert[tri[n + 1]]});
        }
      }
    }
  }
}

}  // namespace

SdfGrid query_grid(const FeatureField& field, const Decoder& decoder,
                   const Aabb& bbox, double cell_size) {
  if (!(cell_size > 0.0)) throw ArgumentError("query_grid: cell_size must be positive");
  if (!bbox.valid() || (bbox.extent().array() <= 0.0).any())
    throw ArgumentError("query_grid: bbox must have positive volume");

  SdfGrid grid;
  grid.origin = bbox.min;
  grid.cell_size = cell_size;
  for (int a = 0; a < 3; ++a) {
    grid.dims[a] =
        std::max(2, int(std::ceil(bbox.extent()[a] / cell_size)) + 1);
  }
  size_t total = size_t(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  grid.values.assign(total, 0.0);
  grid.valid.assign(total, 0);

  QueryResult q;
  for (int k = 0; k < grid.dims[2]; ++k) {
    for (int j = 0; j < grid.dims[1]; ++j) {
      for (int i = 0; i < grid.dims[0]; ++i) {
        Vec3 x = grid.origin + cell_size * Vec3(i, j, k);
        size_t idx = grid.index(i, j, k);
        // Mask to directly observed space: a complete finest-level cell.
        // Coarse-only regions decode to unsupervised extrapolation and
        // would fabricate surfaces.
        if (field.leaf_complete(x) && field.query(x, q)) {
          grid.values[idx] = decoder.forward(q.feature);
          grid.valid[idx] = 1;
        }
      }
    }
  }
  return grid;
}

TriangleMesh marching_cubes(const SdfGrid& grid, double iso) {
  for (int a = 0; a < 3; ++a)
    if (grid.dims[a] < 2)
      throw ArgumentError("marching_cubes: grid needs at least 2 points per axis");
  TriangleMesh mesh;
  EdgeCache cache;
  std::array<int64_t, 3> gdims = {grid.dims[0], grid.dims[1], grid.dims[2]};
  polygonise(grid, iso, 0, 0, 0, gdims, grid.origin, cache, mesh);
  return mesh;
}

TriangleMesh extract_mesh(const FeatureField& field, const Decoder& decoder,
                          const Aabb& bbox, double cell_size, double iso,
                          int block_cells) {
  if (block_cells < 1) throw ArgumentError("extract_mesh: block_cells must be positive");
  if (!(cell_size > 0.0)) throw ArgumentError("extract_mesh: cell_size must be positive");
  if (!bbox.valid() || (bbox.extent().array() <= 0.0).any())
    throw ArgumentError("extract_mesh: bbox must have positive volume");

  std::array<int64_t, 3> gdims;
  for (int a = 0; a < 3; ++a)
    gdims[a] = std::max<int64_t>(
        2, int64_t(std::ceil(bbox.extent()[a] / cell_size)) + 1);

  TriangleMesh mesh;
  EdgeCache cache;
  QueryResult q;
  // Cell ranges [b, b+block_cells) per axis; lattice blocks overlap by one
  // plane so every cube is covered exactly once and seam vertices land in
  // the shared cache.
  for (int64_t bk = 0; bk + 1 < gdims[2]; bk += block_cells) {
    for (int64_t bj = 0; bj + 1 < gdims[1]; bj += block_cells) {
      for (int64_t bi = 0; bi + 1 < gdims[0]; bi += block_cells) {
        SdfGrid block;
        block.cell_size = cell_size;
        block.origin = bbox.min + cell_size * Vec3(double(bi), double(bj), double(bk));
        int64_t ni = std::min<int64_t>(block_cells, gdims[0] - 1 - bi) + 1;
        int64_t nj = std::min<int64_t>(block_cells, gdims[1] - 1 - bj) + 1;
        int64_t nk = std::min<int64_t>(block_cells, gdims[2] - 1 - bk) + 1;
        block.dims = {int(ni), int(nj), int(nk)};
        size_t total = size_t(ni) * nj * nk;
        block.values.assign(total, 0.0);
        block.valid.assign(total, 0);
        for (int k = 0; k < block.dims[2]; ++k)
          for (int j = 0; j < block.dims[1]; ++j)
            for (int i = 0; i < block.dims[0]; ++i) {
              // Sample at global lattice coordinates, matching query_grid.
              Vec3 x = bbox.min + cell_size * Vec3(double(bi + i),
                                                   double(bj + j),
                                                   double(bk + k));
              size_t idx = block.index(i, j, k);
              if (field.leaf_complete(x) && field.query(x, q)) {
                block.values[idx] = decoder.forward(q.feature);
                block.valid[idx] = 1;
              }
            }
        polygonise(block, iso, bi, bj, bk, gdims, bbox.min, cache, mesh);
      }
    }
  }
  return mesh;
}

void write_mesh(const TriangleMesh& mesh, const std::string& path,
                MeshFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("mesh write: cannot open " + path);

  if (format == MeshFormat::kObj) {
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
      std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", float(v[0]),
                    float(v[1]), float(v[2]));
      os << buf;
    }
    for (const auto& t : mesh.triangles) {
      std::snprintf(buf, sizeof(buf), "f %u %u %u\n", t[0] + 1, t[1] + 1,
                    t[2] + 1);
      os << buf;
    }
    if (!os) throw FormatError("mesh write: write failed for " + path);
    return;
  }

  bool binary = format == MeshFormat::kPlyBinary;
  os << "ply\n"
     << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
     << "element vertex " << mesh.vertices.size() << "\n"
     << "property float x\nproperty float y\nproperty float z\n"
     << "element face " << mesh.triangles.size() << "\n"
     << "property list uchar int vertex_indices\n"
     << "end_header\n";
  if (binary) {
    for (const Vec3& v : mesh.vertices) {
      float xyz[3] = {float(v[0]), float(v[1]), float(v[2])};
      os.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    for (const auto& t : mesh.triangles) {
      uint8_t n = 3;
      int32_t idx[3] = {int32_t(t[0]), int32_t(t[1]), int32_t(t[2])};
      os.write(reinterpret_cast<const char*>(&n), 1);
      os.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
  } else {
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", float(v[0]),
                    float(v[1]), float(v[2]));
      os << buf;
    }
    for (const auto& t : mesh.triangles) {
      std::snprintf(buf, sizeof(buf), "3 %u %u %u\n", t[0], t[1], t[2]);
      os << buf;
    }
  }
  if (!os) throw FormatError("mesh write: write failed for " + path);
}

}  // namespace sdfmap
