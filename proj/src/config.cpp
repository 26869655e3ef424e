#include "sdfmap/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sdfmap/errors.hpp"

namespace sdfmap {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("config: key '" + key + "' expects a number, got '" +
                      value + "'");
  return v;
}

int64_t parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("config: key '" + key + "' expects an integer, got '" +
                      value + "'");
  return v;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

constexpr uint32_t kTrainCmds = kCmdMapBatch | kCmdMapIncremental;
constexpr uint32_t kAllCmds = kCmdMapBatch | kCmdMapIncremental | kCmdMesh |
                              kCmdEval | kCmdMakeSynthetic;

#define DOUBLE_KEY(field)                                          \
  [](RunConfig& c, const std::string& v) {                         \
    c.field = parse_double(#field, v);                             \
  },                                                               \
      [](const RunConfig& c) {                                     \
        std::ostringstream os;                                     \
        os << c.field;                                             \
        return os.str();                                           \
      }

#define INT_KEY(field)                                             \
  [](RunConfig& c, const std::string& v) {                         \
    c.field = int(parse_int(#field, v));                           \
  },                                                               \
      [](const RunConfig& c) { return std::to_string(c.field); }

#define STRING_KEY(field)                                          \
  [](RunConfig& c, const std::string& v) { c.field = v; },         \
      [](const RunConfig& c) { return c.field; }

}  // namespace

const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys = {
      {"leaf_size", "finest grid cell edge, meters",
       kTrainCmds | kCmdMakeSynthetic, DOUBLE_KEY(leaf_size)},
      {"levels", "grid hierarchy depth", kTrainCmds, INT_KEY(levels)},
      {"feature_len", "doubles per grid corner", kTrainCmds,
       INT_KEY(feature_len)},
      {"hidden_layers", "decoder hidden layer count", kTrainCmds,
       INT_KEY(hidden_layers)},
      {"hidden_width", "decoder hidden layer width", kTrainCmds,
       INT_KEY(hidden_width)},
      {"band_samples", "surface-band samples per beam", kTrainCmds,
       INT_KEY(band_samples)},
      {"free_samples", "free-space samples per beam", kTrainCmds,
       INT_KEY(free_samples)},
      {"sigma", "label sharpness, meters; band half-width is 3*sigma",
       kTrainCmds, DOUBLE_KEY(sigma)},
      {"min_range", "drop beams shorter than this, meters", kTrainCmds,
       DOUBLE_KEY(min_range)},
      {"max_range", "drop beams longer than this, meters", kTrainCmds,
       DOUBLE_KEY(max_range)},
      {"voxel_down", "voxel pre-filter edge, meters; 0 disables", kTrainCmds,
       DOUBLE_KEY(voxel_down)},
      {"lambda_e", "weight of the gradient-norm term", kTrainCmds,
       DOUBLE_KEY(lambda_e)},
      {"lambda_r", "weight of the anchor regularizer (incremental)",
       kCmdMapIncremental, DOUBLE_KEY(lambda_r)},
      {"omega_max", "importance cap (incremental)", kCmdMapIncremental,
       DOUBLE_KEY(omega_max)},
      {"fd_step", "spatial finite-difference step, meters; 0 = leaf_size/2",
       kTrainCmds, DOUBLE_KEY(fd_step)},
      {"feature_lr", "learning rate for grid features", kTrainCmds,
       DOUBLE_KEY(feature_lr)},
      {"mlp_lr", "learning rate for the decoder (batch mode)", kCmdMapBatch,
       DOUBLE_KEY(mlp_lr)},
      {"iterations", "total training iterations (batch mode)", kCmdMapBatch,
       INT_KEY(iterations)},
      {"iterations_per_scan", "training iterations per scan (incremental)",
       kCmdMapIncremental, INT_KEY(iterations_per_scan)},
      {"batch_size", "samples per training iteration", kTrainCmds,
       INT_KEY(batch_size)},
      {"mesh_cell", "meshing lattice spacing, meters", kCmdMesh,
       DOUBLE_KEY(mesh_cell)},
      {"mesh_bbox", "x0,y0,z0,x1,y1,z1 box; empty = allocated extent",
       kCmdMesh, STRING_KEY(mesh_bbox)},
      {"mesh_block", "meshing block size in cells", kCmdMesh,
       INT_KEY(mesh_block)},
      {"mesh_format", "ply_binary | ply_ascii | obj", kCmdMesh,
       STRING_KEY(mesh_format)},
      {"eval_tau", "distance threshold for ratio metrics, meters", kCmdEval,
       DOUBLE_KEY(eval_tau)},
      {"eval_samples", "points sampled per mesh surface", kCmdEval,
       INT_KEY(eval_samples)},
      {"scene", "sphere | room | two_region", kCmdMakeSynthetic,
       STRING_KEY(scene)},
      {"scene_radius", "sphere radius / room half-extent scale, meters",
       kCmdMakeSynthetic, DOUBLE_KEY(scene_radius)},
      {"scene_scans", "number of scans to generate", kCmdMakeSynthetic,
       INT_KEY(scene_scans)},
      {"scene_beams", "beams per generated scan", kCmdMakeSynthetic,
       INT_KEY(scene_beams)},
      {"scan_dir", "directory of .bin/.ply scans", kTrainCmds,
       STRING_KEY(scan_dir)},
      {"pose_file", "12-number-per-line sensor poses", kTrainCmds,
       STRING_KEY(pose_file)},
      {"out_dir", "output directory", kAllCmds, STRING_KEY(out_dir)},
      {"model_in", "decoder weights to load", kCmdMapIncremental | kCmdMesh,
       STRING_KEY(model_in)},
      {"model_out", "decoder weights to save", kCmdMapBatch,
       STRING_KEY(model_out)},
      {"field_in", "feature grid to load (resume / mesh)",
       kTrainCmds | kCmdMesh, STRING_KEY(field_in)},
      {"field_out", "feature grid to save", kTrainCmds,
       STRING_KEY(field_out)},
      {"log_file", "CSV training log path", kTrainCmds, STRING_KEY(log_file)},
      {"mesh_out", "mesh output path", kCmdMesh, STRING_KEY(mesh_out)},
      {"pred_path", "predicted mesh or cloud", kCmdEval,
       STRING_KEY(pred_path)},
      {"gt_path", "ground-truth mesh or cloud", kCmdEval, STRING_KEY(gt_path)},
      {"gt_mask_path", "optional masked ground truth for accuracy", kCmdEval,
       STRING_KEY(gt_mask_path)},
      {"report_out", "metrics CSV output path", kCmdEval,
       STRING_KEY(report_out)},
      {"seed", "run seed", kAllCmds,
       [](RunConfig& c, const std::string& v) {
         c.seed = uint64_t(parse_int("seed", v));
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"threads", "worker threads; 0 = all cores", kTrainCmds | kCmdMesh,
       INT_KEY(threads)},
      {"checkpoint_every", "save the field every k scans; 0 disables",
       kCmdMapIncremental, INT_KEY(checkpoint_every)},
      {"start_scan", "first scan index (checkpoint resume)",
       kCmdMapIncremental, INT_KEY(start_scan)},
  };
  return keys;
}

void apply_key_value(RunConfig& config, const std::string& key,
                     const std::string& value) {
  for (const ConfigKey& k : config_registry()) {
    if (key == k.name) {
      k.set(config, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " of " +
                        path + " is not key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      apply_key_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (line " +
                        std::to_string(line_no) + " of " + path + ")");
    }
  }
}

double effective_fd_step(const RunConfig& config) {
  return config.fd_step > 0.0 ? config.fd_step : 0.5 * config.leaf_size;
}

void validate_config(const RunConfig& config, uint32_t command) {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (command & (kCmdMapBatch | kCmdMapIncremental)) {
    if (!(config.leaf_size > 0.0)) fail("leaf_size must be positive");
    if (config.levels < 1) fail("levels must be at least 1");
    if (config.feature_len < 1) fail("feature_len must be at least 1");
    if (config.hidden_layers < 1) fail("hidden_layers must be at least 1");
    if (config.hidden_width < 1) fail("hidden_width must be at least 1");
    if (config.band_samples < 0 || config.free_samples < 0)
      fail("sample counts must be non-negative");
    if (config.band_samples + config.free_samples == 0)
      fail("at least one sample per beam required");
    if (!(config.sigma > 0.0)) fail("sigma must be positive");
    if (config.max_range <= 0.0) fail("max_range must be positive");
    if (config.min_range < 0.0) fail("min_range must be non-negative");
    if (config.batch_size < 1) fail("batch_size must be at least 1");
    if (config.lambda_e < 0.0) fail("lambda_e must be non-negative");
    if (config.fd_step < 0.0) fail("fd_step must be non-negative");
    if (!(config.feature_lr > 0.0)) fail("feature_lr must be positive");
    if (config.scan_dir.empty()) fail("scan_dir is required");
    if (config.pose_file.empty()) fail("pose_file is required");
  }
  if (command & kCmdMapBatch) {
    if (config.iterations < 0) fail("iterations must be non-negative");
    if (!(config.mlp_lr > 0.0)) fail("mlp_lr must be positive");
  }
  if (command & kCmdMapIncremental) {
    if (config.iterations_per_scan < 0)
      fail("iterations_per_scan must be non-negative");
    if (config.lambda_r < 0.0) fail("lambda_r must be non-negative");
    if (config.omega_max < 0.0) fail("omega_max must be non-negative");
    if (config.checkpoint_every < 0)
      fail("checkpoint_every must be non-negative");
    if (config.start_scan < 0) fail("start_scan must be non-negative");
    if (config.model_in.empty())
      fail("map-incremental needs model_in (a pre-trained decoder)");
  }
  if (command & kCmdMesh) {
    if (!(config.mesh_cell > 0.0)) fail("mesh_cell must be positive");
    if (config.mesh_block < 1) fail("mesh_block must be at least 1");
    if (config.mesh_format != "ply_binary" &&
        config.mesh_format != "ply_ascii" && config.mesh_format != "obj")
      fail("mesh_format must be ply_binary, ply_ascii or obj");
    if (config.field_in.empty()) fail("mesh needs field_in (a trained map)");
    if (config.model_in.empty()) fail("mesh needs model_in (decoder weights)");
    if (!config.mesh_bbox.empty()) {
      double v[6];
      if (std::sscanf(config.mesh_bbox.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf",
                      &v[0], &v[1], &v[2], &v[3], &v[4], &v[5]) != 6)
        fail("mesh_bbox expects x0,y0,z0,x1,y1,z1");
    }
  }
  if (command & kCmdEval) {
    if (!(config.eval_tau > 0.0)) fail("eval_tau must be positive");
    if (config.eval_samples < 1) fail("eval_samples must be at least 1");
    if (config.pred_path.empty()) fail("eval needs pred_path");
    if (config.gt_path.empty()) fail("eval needs gt_path");
  }
  if (command & kCmdMakeSynthetic) {
    if (config.scene != "sphere" && config.scene != "room" &&
        config.scene != "two_region")
      fail("scene must be sphere, room or two_region");
    if (!(config.scene_radius > 0.0)) fail("scene_radius must be positive");
    if (config.scene_scans < 1) fail("scene_scans must be at least 1");
    if (config.scene_beams < 1) fail("scene_beams must be at least 1");
    if (config.out_dir.empty()) fail("make-synthetic needs out_dir");
  }
}

}  // namespace sdfmap
