#include "sdfmap/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "sdfmap/errors.hpp"

namespace sdfmap {

std::vector<Vec3> read_scan_bin(const std::string& path, BinReadStats* stats) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw FormatError("scan file: cannot open " + path);
  std::streamsize size = is.tellg();
  is.seekg(0);
  if (size % 16 != 0)
    throw FormatError("scan file: " + path + " length " +
                      std::to_string(size) +
                      " is not a multiple of 16 bytes (truncated at offset " +
                      std::to_string(size - size % 16) + ")");
  size_t n = size_t(size) / 16;
  std::vector<float> raw(n * 4);
  is.read(reinterpret_cast<char*>(raw.data()), size);
  if (!is) throw FormatError("scan file: read failed for " + path);

  std::vector<Vec3> points;
  points.reserve(n);
  size_t dropped = 0;
  for (size_t i = 0; i < n; ++i) {
    float x = raw[i * 4], y = raw[i * 4 + 1], z = raw[i * 4 + 2];
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      ++dropped;
      continue;
    }
    points.emplace_back(x, y, z);
  }
  if (stats) {
    stats->points = points.size();
    stats->dropped_nan = dropped;
  }
  return points;
}

void write_scan_bin(const std::string& path, const std::vector<Vec3>& points) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("scan file: cannot open " + path + " for write");
  for (const Vec3& p : points) {
    float row[4] = {float(p[0]), float(p[1]), float(p[2]), 0.0f};
    os.write(reinterpret_cast<const char*>(row), sizeof(row));
  }
  if (!os) throw FormatError("scan file: write failed for " + path);
}

namespace {

struct PlyProperty {
  std::string name;
  int size = 0;        // bytes, scalar properties
  bool is_float = false;
  bool is_double = false;
  bool is_list = false;
  int count_size = 0;  // list count type size
  int item_size = 0;   // list item type size
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
};

int ply_type_size(const std::string& t) {
  if (t == "char" || t == "int8" || t == "uchar" || t == "uint8") return 1;
  if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") return 2;
  if (t == "int" || t == "int32" || t == "uint" || t == "uint32") return 4;
  if (t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double read_binary_scalar(std::istream& is, int size, bool flt, bool dbl,
                          const std::string& path) {
  char buf[8];
  is.read(buf, size);
  if (!is) throw FormatError("ply file: truncated data in " + path);
  if (dbl) {
    double v;
    std::memcpy(&v, buf, 8);
    return v;
  }
  if (flt) {
    float v;
    std::memcpy(&v, buf, 4);
    return double(v);
  }
  // Integer types; sign does not matter for the magnitudes we read.
  int64_t v = 0;
  std::memcpy(&v, buf, size);
  return double(v);
}

}  // namespace

PlyData read_ply(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("ply file: cannot open " + path);

  std::string line;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply")
    throw FormatError("ply file: missing ply magic in " + path);

  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw FormatError("ply file: unsupported format " + fmt + " in " + path);
    } else if (word == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      elements.push_back(el);
    } else if (word == "property") {
      if (elements.empty())
        throw FormatError("ply file: property before element in " + path);
      PlyProperty prop;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ctype, itype;
        ls >> ctype >> itype >> prop.name;
        prop.is_list = true;
        prop.count_size = ply_type_size(ctype);
        prop.item_size = ply_type_size(itype);
        if (prop.count_size == 0 || prop.item_size == 0)
          throw FormatError("ply file: unknown list types in " + path);
      } else {
        ls >> prop.name;
        prop.size = ply_type_size(type);
        if (prop.size == 0)
          throw FormatError("ply file: unknown property type " + type + " in " + path);
        prop.is_float = type == "float" || type == "float32";
        prop.is_double = type == "double" || type == "float64";
      }
      elements.back().properties.push_back(prop);
    } else if (word == "end_header") {
      break;
    } else {
      throw FormatError("ply file: unexpected header line '" + line + "' in " + path);
    }
  }

  PlyData out;
  for (const PlyElement& el : elements) {
    bool is_vertex = el.name == "vertex";
    bool is_face = el.name == "face";
    int xi = -1, yi = -1, zi = -1;
    if (is_vertex) {
      for (size_t p = 0; p < el.properties.size(); ++p) {
        if (el.properties[p].name == "x") xi = int(p);
        if (el.properties[p].name == "y") yi = int(p);
        if (el.properties[p].name == "z") zi = int(p);
      }
      for (auto [idx, name] : {std::pair{xi, "x"}, {yi, "y"}, {zi, "z"}})
        if (idx < 0)
          throw FormatError("ply file: vertex element missing property " +
                            std::string(name) + " in " + path);
      out.vertices.reserve(el.count);
    }

    for (size_t row = 0; row < el.count; ++row) {
      std::vector<double> scalars(el.properties.size(), 0.0);
      std::vector<double> list_items;
      if (binary) {
        for (size_t p = 0; p < el.properties.size(); ++p) {
          const PlyProperty& prop = el.properties[p];
          if (prop.is_list) {
            double n = read_binary_scalar(is, prop.count_size, false, false, path);
            if (is_face && prop.name.find("vert") != std::string::npos) {
              list_items.clear();
              for (int i = 0; i < int(n); ++i)
                list_items.push_back(read_binary_scalar(is, prop.item_size,
                                                        false, false, path));
            } else {
              is.ignore(std::streamsize(n) * prop.item_size);
            }
          } else {
            scalars[p] = read_binary_scalar(is, prop.size, prop.is_float,
                                            prop.is_double, path);
          }
        }
      } else {
        if (!std::getline(is, line))
          throw FormatError("ply file: truncated data in " + path);
        std::istringstream ls(line);
        for (size_t p = 0; p < el.properties.size(); ++p) {
          const PlyProperty& prop = el.properties[p];
          if (prop.is_list) {
            size_t n;
            if (!(ls >> n))
              throw FormatError("ply file: bad list row in " + path);
            list_items.clear();
            for (size_t i = 0; i < n; ++i) {
              double v;
              if (!(ls >> v))
                throw FormatError("ply file: bad list row in " + path);
              list_items.push_back(v);
            }
          } else {
            if (!(ls >> scalars[p]))
              throw FormatError("ply file: bad data row in " + path);
          }
        }
      }
      if (is_vertex)
        out.vertices.emplace_back(scalars[xi], scalars[yi], scalars[zi]);
      if (is_face && list_items.size() >= 3) {
        for (size_t i = 1; i + 1 < list_items.size(); ++i)
          out.triangles.push_back({uint32_t(list_items[0]),
                                   uint32_t(list_items[i]),
                                   uint32_t(list_items[i + 1])});
      }
    }
  }
  for (const auto& t : out.triangles)
    for (uint32_t idx : t)
      if (idx >= out.vertices.size())
        throw FormatError("ply file: face index out of range in " + path);
  return out;
}

std::vector<Vec3> read_scan_ply(const std::string& path) {
  return read_ply(path).vertices;
}

std::vector<Pose> read_poses(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("pose file: cannot open " + path);
  std::vector<Pose> poses;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[12];
    for (int i = 0; i < 12; ++i) {
      if (!(ls >> v[i]))
        throw FormatError("pose file: line " + std::to_string(line_no) +
                          " of " + path + " does not hold 12 numbers");
    }
    std::string extra;
    if (ls >> extra)
      throw FormatError("pose file: line " + std::to_string(line_no) + " of " +
                        path + " has trailing content after 12 numbers");
    Pose pose;
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.translation = Vec3(v[3], v[7], v[11]);

    double ortho = (pose.rotation.transpose() * pose.rotation -
                    Eigen::Matrix3d::Identity())
                       .cwiseAbs()
                       .maxCoeff();
    double det_err = std::abs(pose.rotation.determinant() - 1.0);
    double drift = std::max(ortho, det_err);
    if (drift > 1e-3)
      throw FormatError("pose file: line " + std::to_string(line_no) + " of " +
                        path + " is not a rotation (drift " +
                        std::to_string(drift) + ")");
    if (drift > 1e-6)
      std::cerr << "warning: pose file " << path << " line " << line_no
                << " rotation drift " << drift << "\n";
    poses.push_back(pose);
  }
  return poses;
}

void write_poses(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream os(path);
  if (!os) throw FormatError("pose file: cannot open " + path + " for write");
  char buf[64];
  for (const Pose& p : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        double v = c < 3 ? p.rotation(r, c) : p.translation[r];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << buf << (r == 2 && c == 3 ? "\n" : " ");
      }
    }
  }
  if (!os) throw FormatError("pose file: write failed for " + path);
}

Scan to_world(const std::vector<Vec3>& raw, const Pose& pose,
              double max_range) {
  Scan scan;
  scan.sensor_origin = pose.translation;
  scan.points.reserve(raw.size());
  for (const Vec3& p : raw) {
    if (max_range > 0.0 && p.norm() > max_range) continue;
    scan.points.push_back(pose.rotation * p + pose.translation);
  }
  return scan;
}

std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points,
                                   double voxel) {
  if (!(voxel > 0.0)) throw ArgumentError("voxel_downsample: voxel must be positive");
  std::unordered_set<uint64_t> seen;
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& p : points) {
    int64_t ix = int64_t(std::floor(p[0] / voxel));
    int64_t iy = int64_t(std::floor(p[1] / voxel));
    int64_t iz = int64_t(std::floor(p[2] / voxel));
    uint64_t key = (uint64_t(ix) * 73856093u) ^ (uint64_t(iy) * 19349669u) ^
                   (uint64_t(iz) * 83492791u);
    if (seen.insert(key).second) out.push_back(p);
  }
  return out;
}

}  // namespace sdfmap
