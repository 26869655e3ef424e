#include "sdfmap/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "sdfmap/errors.hpp"
#include "sdfmap/rng.hpp"

namespace sdfmap {

double bce_loss(double o, double l, double clamp) {
  o = std::min(std::max(o, clamp), 1.0 - clamp);
  return -(l * std::log(o) + (1.0 - l) * std::log(1.0 - o));
}

double eikonal_loss(const Vec3& grad) {
  double d = grad.norm() - 1.0;
  return d * d;
}

double reg_loss(const FeatureField& field, std::span<const uint32_t> slots) {
  int L = field.layout().feature_len;
  double sum = 0.0;
  for (uint32_t s : slots) {
    const double* theta = field.feature(s);
    const double* anchor = field.anchor(s);
    const double* omega = field.importance(s);
    for (int c = 0; c < L; ++c) {
      double d = theta[c] - anchor[c];
      sum += omega[c] * d * d;
    }
  }
  return sum;
}

std::optional<Vec3> spatial_gradient(const FeatureField& field,
                                     const Decoder& decoder, const Vec3& x,
                                     double step) {
  QueryResult q;
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 offset = Vec3::Zero();
    offset[k] = step;
    if (!field.query(x + offset, q)) return std::nullopt;
    double fp = decoder.forward(q.feature);
    if (!field.query(x - offset, q)) return std::nullopt;
    double fm = decoder.forward(q.feature);
    g[k] = (fp - fm) / (2.0 * step);
  }
  return g;
}

void FeatureGradients::begin(size_t slot_count, int feature_len) {
  feature_len_ = feature_len;
  if (dense_of_slot_.size() < slot_count)
    dense_of_slot_.resize(slot_count, kUnset);
  for (uint32_t s : touched_) dense_of_slot_[s] = kUnset;
  touched_.clear();
  grads_.clear();
}

uint32_t FeatureGradients::touch(uint32_t slot) {
  uint32_t& d = dense_of_slot_[slot];
  if (d == kUnset) {
    d = static_cast<uint32_t>(touched_.size());
    touched_.push_back(slot);
    grads_.resize(grads_.size() + feature_len_, 0.0);
  }
  return d;
}

Trainer::Trainer(FeatureField& field, Decoder& decoder, TrainMode mode,
                 const LossConfig& loss_config, const OptimConfig& optim_config)
    : field_(field),
      decoder_(decoder),
      mode_(mode),
      loss_config_(loss_config),
      optim_config_(optim_config) {
  if (decoder_.config().input_len != field_.layout().feature_len)
    throw ConfigError("trainer: decoder input length does not match field");
  if (!(loss_config_.fd_step > 0.0))
    throw ConfigError("trainer: fd_step must be positive");
  if (loss_config_.sigma <= 0.0)
    throw ConfigError("trainer: sigma must be positive");
  if (mode_ == TrainMode::kBatch) {
    mlp_m_.assign(decoder_.param_count(), 0.0);
    mlp_v_.assign(decoder_.param_count(), 0.0);
  }
}

double Trainer::bce_upstream(double f, double label) const {
  // d bce / d f through o = S(f). Zero when the output is clamped.
  double o_raw = sigmoid_label(f, loss_config_.sigma);
  double c = loss_config_.bce_clamp;
  if (o_raw <= c || o_raw >= 1.0 - c) return 0.0;
  double dl_do = (o_raw - label) / (o_raw * (1.0 - o_raw));
  double do_df = -o_raw * (1.0 - o_raw) / loss_config_.sigma;
  return dl_do * do_df;
}

void Trainer::scatter_sample_gradient(const QueryResult& q, double upstream,
                                      bool with_mlp) {
  d_input_scratch_.assign(field_.layout().feature_len, 0.0);
  decoder_.backward(q.feature, upstream,
                    with_mlp ? mlp_grad_.data() : nullptr,
                    d_input_scratch_.data());
  int L = field_.layout().feature_len;
  for (const Contribution& c : q.contributions) {
    double* g = fg_.grad_of(fg_.dense_of(c.slot));
    for (int i = 0; i < L; ++i) g[i] += c.weight * d_input_scratch_[i];
  }
}

LossTerms Trainer::compute(std::span<const Sample> pool,
                           std::span<const size_t> batch,
                           bool with_gradients) {
  fg_.begin(field_.slot_count(), field_.layout().feature_len);
  bool with_mlp = with_gradients && mode_ == TrainMode::kBatch;
  if (with_mlp) mlp_grad_.assign(decoder_.param_count(), 0.0);

  LossTerms terms;
  size_t n_batch = batch.size();
  size_t n_band = 0;
  for (size_t idx : batch)
    if (pool[idx].near_surface) ++n_band;

  double eps = loss_config_.fd_step;
  double lambda_e = loss_config_.lambda_e;
  double bce_sum = 0.0, eik_sum = 0.0;

  for (size_t idx : batch) {
    const Sample& s = pool[idx];

    if (field_.query(s.position, center_scratch_)) {
      for (const Contribution& c : center_scratch_.contributions)
        fg_.touch(c.slot);
      double f = decoder_.forward(center_scratch_.feature);
      double o = sigmoid_label(f, loss_config_.sigma);
      bce_sum += bce_loss(o, s.label, loss_config_.bce_clamp);
      if (with_gradients) {
        double up = bce_upstream(f, s.label) / double(n_batch);
        if (up != 0.0) scatter_sample_gradient(center_scratch_, up, with_mlp);
      }
    }

    if (s.near_surface && lambda_e > 0.0 && n_band > 0) {
      bool complete = true;
      double fvals[6];
      for (int k = 0; k < 3 && complete; ++k) {
        for (int sgn = 0; sgn < 2 && complete; ++sgn) {
          Vec3 x = s.position;
          x[k] += sgn == 0 ? eps : -eps;
          QueryResult& q = offset_scratch_[k * 2 + sgn];
          if (!field_.query(x, q)) {
            complete = false;
            break;
          }
          for (const Contribution& c : q.contributions) fg_.touch(c.slot);
          fvals[k * 2 + sgn] = decoder_.forward(q.feature);
        }
      }
      if (complete) {
        Vec3 g;
        for (int k = 0; k < 3; ++k)
          g[k] = (fvals[k * 2] - fvals[k * 2 + 1]) / (2.0 * eps);
        double norm = g.norm();
        eik_sum += eikonal_loss(g);
        if (with_gradients && norm > 1e-12) {
          double scale = lambda_e * 2.0 * (norm - 1.0) / norm / double(n_band);
          for (int k = 0; k < 3; ++k) {
            double up = scale * g[k] / (2.0 * eps);
            scatter_sample_gradient(offset_scratch_[k * 2], up, with_mlp);
            scatter_sample_gradient(offset_scratch_[k * 2 + 1], -up, with_mlp);
          }
        }
      }
    }
  }

  terms.bce = n_batch > 0 ? bce_sum / double(n_batch) : 0.0;
  terms.eikonal = n_band > 0 ? eik_sum / double(n_band) : 0.0;

  double lambda_r = mode_ == TrainMode::kIncremental ? loss_config_.lambda_r : 0.0;
  if (lambda_r > 0.0) {
    terms.reg = reg_loss(field_, fg_.touched());
    if (with_gradients) {
      int L = field_.layout().feature_len;
      for (uint32_t s : fg_.touched()) {
        const double* theta = field_.feature(s);
        const double* anchor = field_.anchor(s);
        const double* omega = field_.importance(s);
        double* g = fg_.grad_of(fg_.dense_of(s));
        for (int c = 0; c < L; ++c)
          g[c] += lambda_r * 2.0 * omega[c] * (theta[c] - anchor[c]);
      }
    }
  }

  terms.total = terms.bce + lambda_e * terms.eikonal + lambda_r * terms.reg;
  return terms;
}

void Trainer::apply_gradients() {
  const OptimConfig& oc = optim_config_;
  int L = field_.layout().feature_len;
  for (uint32_t s : fg_.touched()) {
    const double* g = fg_.grad_of(fg_.dense_of(s));
    double* theta = field_.feature(s);
    double* m = field_.adam_m(s);
    double* v = field_.adam_v(s);
    uint64_t t = ++field_.adam_step(s);
    double bc1 = 1.0 - std::pow(oc.beta1, double(t));
    double bc2 = 1.0 - std::pow(oc.beta2, double(t));
    for (int c = 0; c < L; ++c) {
      m[c] = oc.beta1 * m[c] + (1.0 - oc.beta1) * g[c];
      v[c] = oc.beta2 * v[c] + (1.0 - oc.beta2) * g[c] * g[c];
      theta[c] -= oc.feature_lr * (m[c] / bc1) /
                  (std::sqrt(v[c] / bc2) + oc.epsilon);
    }
  }
  if (mode_ == TrainMode::kBatch && !mlp_grad_.empty()) {
    uint64_t t = ++mlp_step_;
    double bc1 = 1.0 - std::pow(oc.beta1, double(t));
    double bc2 = 1.0 - std::pow(oc.beta2, double(t));
    std::span<double> params = decoder_.params();
    for (size_t i = 0; i < params.size(); ++i) {
      double g = mlp_grad_[i];
      mlp_m_[i] = oc.beta1 * mlp_m_[i] + (1.0 - oc.beta1) * g;
      mlp_v_[i] = oc.beta2 * mlp_v_[i] + (1.0 - oc.beta2) * g * g;
      params[i] -= oc.mlp_lr * (mlp_m_[i] / bc1) /
                   (std::sqrt(mlp_v_[i] / bc2) + oc.epsilon);
    }
  }
}

void Trainer::log_row(const TrainRow& row) {
  if (!csv_) return;
  if (!csv_header_written_) {
    *csv_ << "iteration,bce,eikonal,reg,total,slots,ms\n";
    csv_header_written_ = true;
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%llu,%.12g,%.12g,%.12g,%.12g,%llu,%.3f\n",
                (unsigned long long)row.iteration, row.loss.bce,
                row.loss.eikonal, row.loss.reg, row.loss.total,
                (unsigned long long)row.touched_slots, row.ms);
  *csv_ << buf;
}

std::vector<TrainRow> Trainer::run(std::span<const Sample> pool,
                                   int iterations, size_t batch_size,
                                   uint64_t seed) {
  std::vector<TrainRow> rows;
  rows.reserve(iterations);
  Batcher batcher(pool, batch_size, derive_seed(seed, 0xba7c4ull));
  for (int it = 0; it < iterations; ++it) {
    auto t0 = std::chrono::steady_clock::now();
    std::span<const size_t> batch = batcher.next();
    LossTerms terms = compute(pool, batch, true);
    if (!std::isfinite(terms.total)) {
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "training diverged at iteration %llu: bce=%g eikonal=%g "
                    "reg=%g",
                    (unsigned long long)iteration_, terms.bce, terms.eikonal,
                    terms.reg);
      throw std::runtime_error(buf);
    }
    apply_gradients();
    if (mode_ == TrainMode::kIncremental) {
      if (scan_touched_flag_.size() < field_.slot_count())
        scan_touched_flag_.resize(field_.slot_count(), 0);
      for (uint32_t s : fg_.touched()) {
        if (!scan_touched_flag_[s]) {
          scan_touched_flag_[s] = 1;
          scan_touched_.push_back(s);
        }
      }
    }
    auto t1 = std::chrono::steady_clock::now();
    TrainRow row;
    row.iteration = iteration_++;
    row.loss = terms;
    row.touched_slots = fg_.touched().size();
    row.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    log_row(row);
    rows.push_back(row);
  }
  return rows;
}

std::vector<TrainRow> Trainer::train_batch(std::span<const Sample> pool,
                                           int iterations, size_t batch_size,
                                           uint64_t seed) {
  if (mode_ != TrainMode::kBatch)
    throw ConfigError("train_batch requires batch mode");
  return run(pool, iterations, batch_size, seed);
}

std::vector<TrainRow> Trainer::train_incremental_step(
    std::span<const Sample> scan, int iterations, size_t batch_size,
    uint64_t seed) {
  if (mode_ != TrainMode::kIncremental)
    throw ConfigError("train_incremental_step requires incremental mode");
  // Per-scan optimizer reset: moments are not persisted in field files, so
  // resuming from a checkpoint replays later scans bit-identically.
  field_.reset_optimizer_state();
  scan_touched_flag_.assign(field_.slot_count(), 0);
  scan_touched_.clear();
  std::vector<TrainRow> rows = run(scan, iterations, batch_size, seed);
  update_importance(scan);
  field_.snapshot_anchors(scan_touched_);
  return rows;
}

void Trainer::update_importance(std::span<const Sample> scan_samples) {
  int L = field_.layout().feature_len;
  // Per-sample absolute BCE gradients, summed per parameter, then added to
  // the stored importance under the cap. Non-negative increments make the
  // cap commutative with per-parameter accumulation order.
  FeatureGradients acc;
  acc.begin(field_.slot_count(), L);
  for (const Sample& s : scan_samples) {
    if (!field_.query(s.position, center_scratch_)) continue;
    double f = decoder_.forward(center_scratch_.feature);
    double up = bce_upstream(f, s.label);
    if (up == 0.0) {
      for (const Contribution& c : center_scratch_.contributions)
        acc.touch(c.slot);
      continue;
    }
    d_input_scratch_.assign(L, 0.0);
    decoder_.backward(center_scratch_.feature, up, nullptr,
                      d_input_scratch_.data());
    for (const Contribution& c : center_scratch_.contributions) {
      double* a = acc.grad_of(acc.touch(c.slot));
      for (int i = 0; i < L; ++i)
        a[i] += std::abs(c.weight * d_input_scratch_[i]);
    }
  }
  for (uint32_t s : acc.touched()) {
    const double* a = acc.grad_of(acc.dense_of(s));
    double* omega = field_.importance(s);
    for (int i = 0; i < L; ++i)
      omega[i] = std::min(omega[i] + a[i], loss_config_.omega_max);
    if (scan_touched_flag_.size() < field_.slot_count())
      scan_touched_flag_.resize(field_.slot_count(), 0);
    if (s < scan_touched_flag_.size() && !scan_touched_flag_[s]) {
      scan_touched_flag_[s] = 1;
      scan_touched_.push_back(s);
    }
  }
}

}  // namespace sdfmap
