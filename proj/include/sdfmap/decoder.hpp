#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sdfmap {

// Shallow fully connected net mapping an interpolated feature vector to a
// scalar field value. Hidden layers use ReLU, the output is linear.
struct MlpConfig {
  int input_len = 8;
  int hidden_layers = 2;   // number of hidden layers
  int hidden_width = 32;
};

class Decoder {
 public:
  Decoder(const MlpConfig& config, uint64_t init_seed);

  const MlpConfig& config() const { return config_; }
  size_t param_count() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // f(feature). Pure; scratch buffers are per-thread.
  double forward(std::span<const double> feature) const;

  // d(upstream * f)/d(params) accumulated into d_params (size param_count,
  // may be null) and d(upstream * f)/d(feature) accumulated into d_input
  // (size input_len, may be null). Recomputes the forward pass internally.
  void backward(std::span<const double> feature, double upstream,
                double* d_params, double* d_input) const;

  void save(const std::string& path) const;
  // expected_input_len >= 0 enforces a match with the stored config.
  static Decoder load(const std::string& path, int expected_input_len = -1);

 private:
  struct LayerShape {
    int in, out;
    size_t weight_offset;  // into params_, row-major [out][in]
    size_t bias_offset;
  };

  MlpConfig config_;
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
};

}  // namespace sdfmap
