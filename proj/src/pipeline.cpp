#include "sdfmap/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sdfmap/decoder.hpp"
#include "sdfmap/errors.hpp"
#include "sdfmap/evaluator.hpp"
#include "sdfmap/feature_field.hpp"
#include "sdfmap/mesher.hpp"
#include "sdfmap/rng.hpp"
#include "sdfmap/sampler.hpp"
#include "sdfmap/synthetic.hpp"
#include "sdfmap/trainer.hpp"

namespace fs = std::filesystem;

namespace sdfmap {

namespace {

// Seed-stream tags so each pipeline stage draws independent randomness.
enum SeedTag : uint64_t {
  kSeedField = 0xf1e1d,
  kSeedMlp = 0x3177,
  kSeedSamples = 0x5a3b,
  kSeedTrain = 0x7a11,
  kSeedEval = 0xe7a1,
};

std::vector<Vec3> read_scan_any(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply")
    return read_scan_ply(path);
  return read_scan_bin(path);
}

SamplerConfig sampler_config(const RunConfig& config) {
  SamplerConfig sc;
  sc.band_count = config.band_samples;
  sc.free_count = config.free_samples;
  sc.sigma = config.sigma;
  sc.min_range = config.min_range;
  sc.max_range = config.max_range;
  return sc;
}

LossConfig loss_config(const RunConfig& config) {
  LossConfig lc;
  lc.sigma = config.sigma;
  lc.lambda_e = config.lambda_e;
  lc.lambda_r = config.lambda_r;
  lc.omega_max = config.omega_max;
  lc.fd_step = effective_fd_step(config);
  return lc;
}

OptimConfig optim_config(const RunConfig& config) {
  OptimConfig oc;
  oc.feature_lr = config.feature_lr;
  oc.mlp_lr = config.mlp_lr;
  return oc;
}

std::string default_path(const RunConfig& config, const std::string& explicit_path,
                         const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  if (!config.out_dir.empty()) return (fs::path(config.out_dir) / name).string();
  throw ConfigError(std::string("config: set out_dir or an explicit path for ") +
                    name);
}

void ensure_parent_dir(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

FieldLayout layout_from(const RunConfig& config, const Vec3& center) {
  return FieldLayout::centered_on(center, config.leaf_size, config.levels,
                                  config.feature_len);
}

struct LogFile {
  std::ofstream stream;
  explicit LogFile(const std::string& path) {
    if (path.empty()) return;
    ensure_parent_dir(path);
    stream.open(path);
    if (!stream) throw ConfigError("config: cannot open log_file " + path);
  }
  std::ostream* get() { return stream.is_open() ? &stream : nullptr; }
};

MeshFormat mesh_format_from(const std::string& name) {
  if (name == "ply_binary") return MeshFormat::kPlyBinary;
  if (name == "ply_ascii") return MeshFormat::kPlyAscii;
  if (name == "obj") return MeshFormat::kObj;
  throw ConfigError("config: unknown mesh_format " + name);
}

Aabb parse_bbox(const std::string& text) {
  double v[6];
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2],
                  &v[3], &v[4], &v[5]) != 6)
    throw ConfigError("config: mesh_bbox expects x0,y0,z0,x1,y1,z1");
  Aabb box;
  box.min = Vec3(v[0], v[1], v[2]);
  box.max = Vec3(v[3], v[4], v[5]);
  if (!box.valid()) throw ConfigError("config: mesh_bbox min exceeds max");
  return box;
}

}  // namespace

std::vector<Scan> load_scans(const RunConfig& config) {
  if (config.scan_dir.empty()) throw ConfigError("config: scan_dir is required");
  if (config.pose_file.empty()) throw ConfigError("config: pose_file is required");
  if (!fs::is_directory(config.scan_dir))
    throw FormatError("scan dir: " + config.scan_dir + " is not a directory");

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(config.scan_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (ext == ".bin" || ext == ".ply") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw FormatError("scan dir: no .bin or .ply scans in " + config.scan_dir);

  std::vector<Pose> poses = read_poses(config.pose_file);
  if (poses.size() != files.size())
    throw FormatError("scan dir: " + std::to_string(files.size()) +
                      " scans but " + std::to_string(poses.size()) +
                      " poses in " + config.pose_file);

  std::vector<Scan> scans;
  scans.reserve(files.size());
  for (size_t i = 0; i < files.size(); ++i) {
    std::vector<Vec3> raw = read_scan_any(files[i]);
    if (config.voxel_down > 0.0) raw = voxel_downsample(raw, config.voxel_down);
    Scan scan = to_world(raw, poses[i], config.max_range);
    scan.source_index = i;
    scans.push_back(std::move(scan));
  }
  return scans;
}

void run_map_batch(const RunConfig& config) {
  std::vector<Scan> scans = load_scans(config);

  FeatureField field =
      config.field_in.empty()
          ? FeatureField(layout_from(config, scans[0].sensor_origin),
                         derive_seed(config.seed, kSeedField))
          : FeatureField::load(config.field_in);
  Decoder decoder(MlpConfig{config.feature_len, config.hidden_layers,
                            config.hidden_width},
                  derive_seed(config.seed, kSeedMlp));

  for (const Scan& scan : scans) field.allocate_scan(scan.points);

  SamplerConfig sc = sampler_config(config);
  std::vector<Sample> pool;
  for (const Scan& scan : scans) {
    sample_scan(scan.sensor_origin, scan.points, sc,
                derive_seed(config.seed, kSeedSamples, scan.source_index),
                pool);
  }

  LogFile log(config.log_file.empty() && !config.out_dir.empty()
                  ? (fs::path(config.out_dir) / "train_log.csv").string()
                  : config.log_file);
  Trainer trainer(field, decoder, TrainMode::kBatch, loss_config(config),
                  optim_config(config));
  trainer.set_log(log.get());
  trainer.train_batch(pool, config.iterations, size_t(config.batch_size),
                      derive_seed(config.seed, kSeedTrain));

  std::string field_path = default_path(config, config.field_out, "field.bin");
  std::string model_path = default_path(config, config.model_out, "decoder.bin");
  ensure_parent_dir(field_path);
  ensure_parent_dir(model_path);
  field.save(field_path);
  decoder.save(model_path);
  std::cout << "trained " << scans.size() << " scans, " << field.slot_count()
            << " feature slots\nfield: " << field_path
            << "\nmodel: " << model_path << "\n";
}

void run_map_incremental(const RunConfig& config) {
  std::vector<Scan> scans = load_scans(config);
  Decoder decoder = Decoder::load(config.model_in, config.feature_len);

  FeatureField field =
      config.field_in.empty()
          ? FeatureField(layout_from(config, scans[0].sensor_origin),
                         derive_seed(config.seed, kSeedField))
          : FeatureField::load(config.field_in);

  if (size_t(config.start_scan) >= scans.size())
    throw ConfigError("config: start_scan beyond the last scan");

  SamplerConfig sc = sampler_config(config);
  LogFile log(config.log_file.empty() && !config.out_dir.empty()
                  ? (fs::path(config.out_dir) / "train_log.csv").string()
                  : config.log_file);
  Trainer trainer(field, decoder, TrainMode::kIncremental, loss_config(config),
                  optim_config(config));
  trainer.set_log(log.get());

  std::string field_path = default_path(config, config.field_out, "field.bin");
  ensure_parent_dir(field_path);

  for (size_t i = size_t(config.start_scan); i < scans.size(); ++i) {
    const Scan& scan = scans[i];
    field.allocate_scan(scan.points);
    std::vector<Sample> samples;
    sample_scan(scan.sensor_origin, scan.points, sc,
                derive_seed(config.seed, kSeedSamples, scan.source_index),
                samples);
    trainer.train_incremental_step(samples, config.iterations_per_scan,
                                   size_t(config.batch_size),
                                   derive_seed(config.seed, kSeedTrain, i));
    if (config.checkpoint_every > 0 &&
        (i + 1) % size_t(config.checkpoint_every) == 0 && i + 1 < scans.size()) {
      char suffix[32];
      std::snprintf(suffix, sizeof(suffix), ".ckpt%06zu", i + 1);
      field.save(field_path + suffix);
    }
  }
  field.save(field_path);
  std::cout << "trained " << (scans.size() - size_t(config.start_scan))
            << " scans incrementally, " << field.slot_count()
            << " feature slots\nfield: " << field_path << "\n";
}

void run_mesh(const RunConfig& config) {
  if (config.field_in.empty()) throw ConfigError("config: mesh needs field_in");
  if (config.model_in.empty()) throw ConfigError("config: mesh needs model_in");
  FeatureField field = FeatureField::load(config.field_in);
  Decoder decoder = Decoder::load(config.model_in, field.layout().feature_len);

  Aabb bbox;
  if (!config.mesh_bbox.empty()) {
    bbox = parse_bbox(config.mesh_bbox);
  } else {
    bbox = field.allocated_leaf_bbox();
    if (!bbox.valid())
      throw ArgumentError("mesh: field has no allocated cells");
    bbox.pad(field.layout().leaf_size);
  }

  TriangleMesh mesh = extract_mesh(field, decoder, bbox, config.mesh_cell, 0.0,
                                   config.mesh_block);
  std::string mesh_path = default_path(config, config.mesh_out, "mesh.ply");
  ensure_parent_dir(mesh_path);
  write_mesh(mesh, mesh_path, mesh_format_from(config.mesh_format));
  std::cout << "mesh: " << mesh.vertices.size() << " vertices, "
            << mesh.triangles.size() << " triangles\n"
            << mesh_path << "\n";
}

namespace {

// A mesh input is surface-sampled; a plain cloud is used as is.
std::vector<Vec3> load_eval_cloud(const std::string& path, int samples,
                                  uint64_t seed) {
  PlyData data = read_ply(path);
  if (data.triangles.empty()) return data.vertices;
  TriangleMesh mesh;
  mesh.vertices = std::move(data.vertices);
  mesh.triangles = std::move(data.triangles);
  return sample_surface(mesh, size_t(samples), seed);
}

}  // namespace

void run_eval(const RunConfig& config) {
  if (config.pred_path.empty()) throw ConfigError("config: eval needs pred_path");
  if (config.gt_path.empty()) throw ConfigError("config: eval needs gt_path");

  std::vector<Vec3> pred =
      load_eval_cloud(config.pred_path, config.eval_samples,
                      derive_seed(config.seed, kSeedEval, 0));
  std::vector<Vec3> gt = load_eval_cloud(config.gt_path, config.eval_samples,
                                         derive_seed(config.seed, kSeedEval, 1));
  std::vector<Vec3> mask;
  if (!config.gt_mask_path.empty())
    mask = load_eval_cloud(config.gt_mask_path, config.eval_samples,
                           derive_seed(config.seed, kSeedEval, 2));

  ReconReport report = compute_report(pred, gt, mask, config.eval_tau);
  std::cout << report_table(report);
  std::cout << report_csv_header() << "\n" << report_csv_row(report) << "\n";
  if (!config.report_out.empty()) {
    ensure_parent_dir(config.report_out);
    std::ofstream os(config.report_out);
    os << report_csv_header() << "\n" << report_csv_row(report) << "\n";
    if (!os) throw FormatError("report write failed for " + config.report_out);
  }
}

void run_make_synthetic(const RunConfig& config) {
  if (config.out_dir.empty())
    throw ConfigError("config: make-synthetic needs out_dir");
  SyntheticScene scene;
  if (config.scene == "sphere")
    scene = make_sphere_scene(config.scene_radius, config.scene_scans,
                              config.scene_beams, config.seed);
  else if (config.scene == "room")
    scene = make_room_scene(config.scene_radius, config.scene_scans,
                            config.scene_beams, config.seed);
  else if (config.scene == "two_region")
    scene = make_two_region_scene(config.scene_scans, config.scene_beams,
                                  config.seed);
  else
    throw ArgumentError("make-synthetic: unknown scene " + config.scene);
  write_scene(scene, config.out_dir);
  size_t total = 0;
  for (const auto& s : scene.scans) total += s.size();
  std::cout << "wrote " << scene.scans.size() << " scans (" << total
            << " points) to " << config.out_dir << "\n";
}

}  // namespace sdfmap
