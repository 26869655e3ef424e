#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdfmap/geometry.hpp"

namespace sdfmap {

// Training sample: a point along a sensor ray with its soft occupancy label.
struct Sample {
  Vec3 position;
  double signed_distance;  // along-ray distance, positive on the sensor side
  double label;            // sigmoid_label(signed_distance)
  bool near_surface;       // drawn from the band around the endpoint
};

struct SamplerConfig {
  int band_count = 5;        // samples in the surface band per beam
  int free_count = 5;        // free-space samples per beam
  double sigma = 0.05;       // label sharpness; band half-width is 3*sigma
  double min_range = 0.0;    // beams shorter than this are skipped
  double max_range = 60.0;   // beams longer than this are skipped
};

// Decreasing logistic mapping from signed distance to occupancy label:
// 1 just behind the surface (d<0), 1/2 on it, 0 deep in free space.
double sigmoid_label(double d, double sigma);

// Draw samples along one beam. Band samples place x = end - d*dir with d
// uniform in [-3*sigma, min(3*sigma, range)]; free samples sit uniformly
// between the origin and the band start, strictly more than 3*sigma from
// the endpoint. Returns false (appending nothing) for degenerate beams.
bool sample_beam(const Vec3& origin, const Vec3& endpoint,
                 const SamplerConfig& config, uint64_t seed,
                 std::vector<Sample>& out);

struct ScanSampleStats {
  size_t beams_used = 0;
  size_t beams_skipped = 0;
};

// Samples for a full scan. Beam i uses derive_seed(seed, i), so the result
// is independent of any point reordering upstream of this call.
ScanSampleStats sample_scan(const Vec3& origin, std::span<const Vec3> endpoints,
                            const SamplerConfig& config, uint64_t seed,
                            std::vector<Sample>& out);

// Epoch-reshuffling minibatch iterator over a fixed sample pool.
class Batcher {
 public:
  Batcher(std::span<const Sample> pool, size_t batch_size, uint64_t seed);

  // Next minibatch of up to batch_size samples; reshuffles when the pool is
  // exhausted. Empty pool yields empty batches.
  std::span<const size_t> next();

 private:
  void reshuffle();

  std::span<const Sample> pool_;
  size_t batch_size_;
  uint64_t seed_;
  uint64_t epoch_ = 0;
  size_t cursor_ = 0;
  std::vector<size_t> order_;
  std::vector<size_t> current_;
};

}  // namespace sdfmap
