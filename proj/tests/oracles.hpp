#pragma once

// Deliberately naive reference implementations used to pin expected values.
// These are written independently of the library code they check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sdfmap/decoder.hpp"
#include "sdfmap/geometry.hpp"

namespace oracle {

inline uint64_t morton_bit_loop(uint64_t x, uint64_t y, uint64_t z) {
  uint64_t code = 0;
  for (int j = 0; j < 21; ++j) {
    code |= ((x >> j) & 1ull) << (3 * j);
    code |= ((y >> j) & 1ull) << (3 * j + 1);
    code |= ((z >> j) & 1ull) << (3 * j + 2);
  }
  return code;
}

// Walks the decoder's flat parameter vector layer by layer:
// row-major weights [out][in], then biases. ReLU between hidden layers,
// identity on the last.
inline double mlp_forward_naive(const sdfmap::MlpConfig& cfg,
                                std::span<const double> params,
                                std::span<const double> input) {
  std::vector<int> widths;
  widths.push_back(cfg.input_len);
  for (int i = 0; i < cfg.hidden_layers; ++i) widths.push_back(cfg.hidden_width);
  widths.push_back(1);

  std::vector<double> act(input.begin(), input.end());
  size_t off = 0;
  for (size_t layer = 0; layer + 1 < widths.size(); ++layer) {
    const int n_in = widths[layer];
    const int n_out = widths[layer + 1];
    std::vector<double> next(static_cast<size_t>(n_out), 0.0);
    for (int o = 0; o < n_out; ++o) {
      double s = 0.0;
      for (int i = 0; i < n_in; ++i)
        s += params[off + static_cast<size_t>(o) * n_in + i] * act[static_cast<size_t>(i)];
      next[static_cast<size_t>(o)] = s;
    }
    off += static_cast<size_t>(n_out) * n_in;
    for (int o = 0; o < n_out; ++o) next[static_cast<size_t>(o)] += params[off + o];
    off += static_cast<size_t>(n_out);
    const bool last = (layer + 2 == widths.size());
    if (!last)
      for (double& v : next) v = std::max(0.0, v);
    act = std::move(next);
  }
  return act[0];
}

// Central finite difference of loss() with respect to *param.
template <typename F>
double central_fd(double* param, double step, F&& loss) {
  const double orig = *param;
  *param = orig + step;
  const double lp = loss();
  *param = orig - step;
  const double lm = loss();
  *param = orig;
  return (lp - lm) / (2.0 * step);
}

inline double sigmoid_ref(double d, double sigma) {
  return 1.0 / (1.0 + std::exp(d / sigma));
}

// Scratch directory under the current working directory, wiped on creation.
inline std::filesystem::path test_dir(const std::string& name) {
  std::filesystem::path p = std::filesystem::current_path() / "test_tmp" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
