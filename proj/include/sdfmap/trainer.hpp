#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sdfmap/decoder.hpp"
#include "sdfmap/feature_field.hpp"
#include "sdfmap/sampler.hpp"

namespace sdfmap {

struct LossConfig {
  double sigma = 0.05;       // label sharpness, shared with the sampler
  double lambda_e = 0.1;     // Eikonal term weight
  double lambda_r = 1e3;     // anchor regularizer weight (incremental mode)
  double omega_max = 1e3;    // importance cap
  double fd_step = 0.05;     // spatial finite-difference step, meters
  double bce_clamp = 1e-7;   // output clamp before the log
};

struct OptimConfig {
  double feature_lr = 1e-2;
  double mlp_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct LossTerms {
  double bce = 0.0;      // mean over the batch
  double eikonal = 0.0;  // mean over band samples in the batch
  double reg = 0.0;      // sum over touched parameters
  double total = 0.0;    // bce + lambda_e*eikonal + lambda_r*reg
};

struct TrainRow {
  uint64_t iteration;
  LossTerms loss;
  uint64_t touched_slots;
  double ms;
};

// Cross entropy between predicted and target occupancy labels, with the
// prediction clamped away from {0,1} before the logs.
double bce_loss(double o, double l, double clamp = 1e-7);

// (|grad| - 1)^2.
double eikonal_loss(const Vec3& grad);

// Sum of importance-weighted squared displacement from the anchors over the
// given slots.
double reg_loss(const FeatureField& field, std::span<const uint32_t> slots);

// Central-difference gradient of the composed field at x. Empty when any of
// the six offset queries misses.
std::optional<Vec3> spatial_gradient(const FeatureField& field,
                                     const Decoder& decoder, const Vec3& x,
                                     double step);

// Sparse gradient accumulator over feature slots, tracking first-touch order.
class FeatureGradients {
 public:
  static constexpr uint32_t kUnset = ~0u;

  void begin(size_t slot_count, int feature_len);
  uint32_t touch(uint32_t slot);
  double* grad_of(uint32_t dense_index) {
    return grads_.data() + size_t(dense_index) * feature_len_;
  }
  const double* grad_of(uint32_t dense_index) const {
    return grads_.data() + size_t(dense_index) * feature_len_;
  }
  uint32_t dense_of(uint32_t slot) const { return dense_of_slot_[slot]; }
  std::span<const uint32_t> touched() const { return touched_; }

 private:
  std::vector<uint32_t> dense_of_slot_;
  std::vector<uint32_t> touched_;
  std::vector<double> grads_;
  int feature_len_ = 0;
};

enum class TrainMode { kBatch, kIncremental };

// Runs gradient steps on the composed field. Batch mode optimizes features
// and decoder jointly with no anchor regularizer; incremental mode freezes
// the decoder, adds the regularizer, and maintains importance weights and
// anchors per scan.
class Trainer {
 public:
  Trainer(FeatureField& field, Decoder& decoder, TrainMode mode,
          const LossConfig& loss_config, const OptimConfig& optim_config);

  // Loss over one minibatch (indices into pool). With with_gradients the
  // accumulated parameter gradients are available from feature_gradients()
  // and mlp_gradients() until the next call. The touched-slot set is
  // tracked either way so the regularizer term is identical in both paths.
  LossTerms compute(std::span<const Sample> pool,
                    std::span<const size_t> batch, bool with_gradients);

  const FeatureGradients& feature_gradients() const { return fg_; }
  std::span<const double> mlp_gradients() const { return mlp_grad_; }

  // Adam step on the gradients accumulated by the last compute().
  void apply_gradients();

  std::vector<TrainRow> train_batch(std::span<const Sample> pool,
                                    int iterations, size_t batch_size,
                                    uint64_t seed);

  // One scan of incremental training: feature-only optimization on the full
  // loss, then importance update and anchor snapshot over touched slots.
  std::vector<TrainRow> train_incremental_step(std::span<const Sample> scan,
                                               int iterations,
                                               size_t batch_size,
                                               uint64_t seed);

  // Importance accumulation over every sample of the scan: per parameter,
  // the sum of per-sample absolute BCE gradients, capped at omega_max.
  void update_importance(std::span<const Sample> scan_samples);

  const LossConfig& loss_config() const { return loss_config_; }
  TrainMode mode() const { return mode_; }

  // Optional CSV sink; a header row is written on first use.
  void set_log(std::ostream* csv) { csv_ = csv; }

 private:
  void scatter_sample_gradient(const QueryResult& q, double upstream,
                               bool with_mlp);
  double bce_upstream(double f, double label) const;
  std::vector<TrainRow> run(std::span<const Sample> pool, int iterations,
                            size_t batch_size, uint64_t seed);
  void log_row(const TrainRow& row);

  FeatureField& field_;
  Decoder& decoder_;
  TrainMode mode_;
  LossConfig loss_config_;
  OptimConfig optim_config_;

  FeatureGradients fg_;
  std::vector<double> mlp_grad_;
  std::vector<double> mlp_m_, mlp_v_;
  uint64_t mlp_step_ = 0;
  uint64_t iteration_ = 0;

  // Union of slots touched since the current scan began (incremental mode).
  std::vector<uint8_t> scan_touched_flag_;
  std::vector<uint32_t> scan_touched_;

  // Scratch for the six offset queries of the Eikonal term.
  QueryResult center_scratch_;
  QueryResult offset_scratch_[6];
  std::vector<double> d_input_scratch_;

  std::ostream* csv_ = nullptr;
  bool csv_header_written_ = false;
};

}  // namespace sdfmap
