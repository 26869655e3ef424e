#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sdfmap {

// Which subcommands consume a given config key.
enum CommandMask : uint32_t {
  kCmdMapBatch = 1,
  kCmdMapIncremental = 2,
  kCmdMesh = 4,
  kCmdEval = 8,
  kCmdMakeSynthetic = 16,
};

struct RunConfig {
  // field
  double leaf_size = 0.1;
  int levels = 4;
  int feature_len = 8;
  // decoder
  int hidden_layers = 2;
  int hidden_width = 32;
  // sampling
  int band_samples = 5;
  int free_samples = 5;
  double sigma = 0.05;
  double min_range = 0.0;
  double max_range = 60.0;
  double voxel_down = 0.0;  // 0 disables the pre-filter
  // loss
  double lambda_e = 0.1;
  double lambda_r = 1e3;
  double omega_max = 1e3;
  double fd_step = 0.0;  // 0 means 0.5 * leaf_size
  // optimizer
  double feature_lr = 1e-2;
  double mlp_lr = 1e-3;
  // iteration budgets
  int iterations = 2000;          // batch mode total
  int iterations_per_scan = 50;   // incremental mode
  int batch_size = 4096;
  // meshing
  double mesh_cell = 0.05;
  std::string mesh_bbox;  // "x0,y0,z0,x1,y1,z1"; empty = allocated bbox
  int mesh_block = 128;
  std::string mesh_format = "ply_binary";  // ply_binary | ply_ascii | obj
  // evaluation
  double eval_tau = 0.1;
  int eval_samples = 1000000;
  // synthetic scenes
  std::string scene = "sphere";  // sphere | room | two_region
  double scene_radius = 2.0;
  int scene_scans = 30;
  int scene_beams = 2000;
  // paths
  std::string scan_dir;
  std::string pose_file;
  std::string out_dir;
  std::string model_in;
  std::string model_out;
  std::string field_in;
  std::string field_out;
  std::string log_file;
  std::string mesh_out;
  std::string pred_path;
  std::string gt_path;
  std::string gt_mask_path;
  std::string report_out;
  // run control
  uint64_t seed = 1;
  int threads = 0;  // 0 = all available
  int checkpoint_every = 0;
  int start_scan = 0;
};

struct ConfigKey {
  const char* name;
  const char* description;
  uint32_t commands;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_registry();

// key = value lines; '#' comments; unknown keys are a ConfigError.
void apply_config_file(RunConfig& config, const std::string& path);

void apply_key_value(RunConfig& config, const std::string& key,
                     const std::string& value);

// Sanity-check the fields a command will consume.
void validate_config(const RunConfig& config, uint32_t command);

// fd_step fallback.
double effective_fd_step(const RunConfig& config);

}  // namespace sdfmap
