#include "sdfmap/sampler.hpp"

#include <cmath>

#include "sdfmap/rng.hpp"

namespace sdfmap {

double sigmoid_label(double d, double sigma) {
  // Evaluate via exp of a non-positive argument to stay stable for large |d|.
  if (d >= 0.0) {
    double e = std::exp(-d / sigma);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d / sigma));
}

bool sample_beam(const Vec3& origin, const Vec3& endpoint,
                 const SamplerConfig& config, uint64_t seed,
                 std::vector<Sample>& out) {
  Vec3 delta = endpoint - origin;
  double range = delta.norm();
  if (!std::isfinite(range) || range <= config.min_range ||
      range < 1e-9 || range > config.max_range)
    return false;
  Vec3 dir = delta / range;
  double band = 3.0 * config.sigma;

  Rng rng(seed);
  // Band: signed distance d measured back along the ray from the endpoint,
  // positive toward the sensor. Points past the endpoint (d<0) are allowed;
  // toward the sensor d is capped by the beam length.
  double d_hi = std::min(band, range);
  for (int i = 0; i < config.band_count; ++i) {
    double d = uniform_in(rng, -band, d_hi);
    Sample s;
    s.position = endpoint - d * dir;
    s.signed_distance = d;
    s.label = sigmoid_label(d, config.sigma);
    s.near_surface = true;
    out.push_back(s);
  }
  // Free space: uniform along the ray up to the start of the band.
  double free_len = range - band;
  if (free_len > 0.0) {
    for (int i = 0; i < config.free_count; ++i) {
      double t = uniform_in(rng, 0.0, free_len);
      double d = range - t;
      Sample s;
      s.position = origin + t * dir;
      s.signed_distance = d;
      s.label = sigmoid_label(d, config.sigma);
      s.near_surface = false;
      out.push_back(s);
    }
  }
  return true;
}

ScanSampleStats sample_scan(const Vec3& origin,
                            std::span<const Vec3> endpoints,
                            const SamplerConfig& config, uint64_t seed,
                            std::vector<Sample>& out) {
  ScanSampleStats stats;
  for (size_t i = 0; i < endpoints.size(); ++i) {
    if (sample_beam(origin, endpoints[i], config, derive_seed(seed, i), out))
      ++stats.beams_used;
    else
      ++stats.beams_skipped;
  }
  return stats;
}

Batcher::Batcher(std::span<const Sample> pool, size_t batch_size,
                 uint64_t seed)
    : pool_(pool), batch_size_(batch_size), seed_(seed) {
  order_.resize(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) order_[i] = i;
  reshuffle();
}

void Batcher::reshuffle() {
  Rng rng(derive_seed(seed_, epoch_++));
  shuffle_fisher_yates(order_, rng);
  cursor_ = 0;
}

std::span<const size_t> Batcher::next() {
  current_.clear();
  if (pool_.empty()) return current_;
  if (cursor_ >= order_.size()) reshuffle();
  size_t take = std::min(batch_size_, order_.size() - cursor_);
  for (size_t i = 0; i < take; ++i) current_.push_back(order_[cursor_ + i]);
  cursor_ += take;
  return current_;
}

}  // namespace sdfmap
