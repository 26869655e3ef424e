#include "sdfmap/decoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "sdfmap/errors.hpp"
#include "sdfmap/rng.hpp"

namespace sdfmap {

namespace {

constexpr char kModelMagic[8] = {'S', 'D', 'F', 'M', 'M', 'L', 'P', '\0'};
constexpr uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("model file: truncated read");
}

// Per-thread scratch for activations so forward/backward allocate nothing
// in steady state.
struct Scratch {
  std::vector<double> acts;      // post-activation outputs, layer by layer
  std::vector<double> deltas;
  std::vector<double> deltas_next;
};

thread_local Scratch tl_scratch;

}  // namespace

Decoder::Decoder(const MlpConfig& config, uint64_t init_seed)
    : config_(config) {
  if (config_.input_len < 1 || config_.hidden_layers < 1 ||
      config_.hidden_width < 1)
    throw ArgumentError("decoder: all dimensions must be positive");

  size_t offset = 0;
  auto add_layer = [&](int in, int out) {
    layers_.push_back({in, out, offset, offset + size_t(in) * out});
    offset += size_t(in) * out + out;
  };
  add_layer(config_.input_len, config_.hidden_width);
  for (int i = 1; i < config_.hidden_layers; ++i)
    add_layer(config_.hidden_width, config_.hidden_width);
  add_layer(config_.hidden_width, 1);
  params_.assign(offset, 0.0);

  // Uniform Kaiming-style init, bound sqrt(6 / fan_in). Biases zero.
  Rng rng(derive_seed(init_seed, 0x6d6c70ull));
  for (const LayerShape& l : layers_) {
    double bound = std::sqrt(6.0 / double(l.in));
    for (size_t i = 0; i < size_t(l.in) * l.out; ++i)
      params_[l.weight_offset + i] = uniform_in(rng, -bound, bound);
  }
}

double Decoder::forward(std::span<const double> feature) const {
  if (int(feature.size()) != config_.input_len)
    throw ArgumentError("decoder forward: feature length mismatch");
  Scratch& s = tl_scratch;
  s.acts.resize(size_t(config_.hidden_width) * layers_.size());
  const double* in = feature.data();
  double out_value = 0.0;
  for (size_t li = 0; li < layers_.size(); ++li) {
    const LayerShape& l = layers_[li];
    double* out = s.acts.data() + li * config_.hidden_width;
    bool last = li + 1 == layers_.size();
    for (int r = 0; r < l.out; ++r) {
      const double* w = params_.data() + l.weight_offset + size_t(r) * l.in;
      double acc = params_[l.bias_offset + r];
      for (int c = 0; c < l.in; ++c) acc += w[c] * in[c];
      if (last)
        out_value = acc;
      else
        out[r] = acc > 0.0 ? acc : 0.0;
    }
    in = out;
  }
  return out_value;
}

void Decoder::backward(std::span<const double> feature, double upstream,
                       double* d_params, double* d_input) const {
  if (int(feature.size()) != config_.input_len)
    throw ArgumentError("decoder backward: feature length mismatch");
  Scratch& s = tl_scratch;
  size_t width = config_.hidden_width;
  s.acts.resize(width * layers_.size());
  s.deltas.resize(width);

  // Forward, keeping post-activation values per hidden layer.
  const double* in = feature.data();
  for (size_t li = 0; li + 1 < layers_.size(); ++li) {
    const LayerShape& l = layers_[li];
    double* out = s.acts.data() + li * width;
    for (int r = 0; r < l.out; ++r) {
      const double* w = params_.data() + l.weight_offset + size_t(r) * l.in;
      double acc = params_[l.bias_offset + r];
      for (int c = 0; c < l.in; ++c) acc += w[c] * in[c];
      out[r] = acc > 0.0 ? acc : 0.0;
    }
    in = out;
  }

  // Backward through the linear output layer.
  {
    const LayerShape& l = layers_.back();
    const double* input = layers_.size() == 1
                              ? feature.data()
                              : s.acts.data() + (layers_.size() - 2) * width;
    if (d_params) {
      double* dw = d_params + l.weight_offset;
      for (int c = 0; c < l.in; ++c) dw[c] += upstream * input[c];
      d_params[l.bias_offset] += upstream;
    }
    const double* w = params_.data() + l.weight_offset;
    for (int c = 0; c < l.in; ++c) s.deltas[c] = upstream * w[c];
  }

  // Hidden layers, last to first.
  for (size_t li = layers_.size() - 1; li-- > 0;) {
    const LayerShape& l = layers_[li];
    const double* post = s.acts.data() + li * width;
    const double* input =
        li == 0 ? feature.data() : s.acts.data() + (li - 1) * width;
    // ReLU gate: delta is zero wherever the unit was inactive.
    for (int r = 0; r < l.out; ++r)
      if (post[r] <= 0.0) s.deltas[r] = 0.0;
    if (d_params) {
      for (int r = 0; r < l.out; ++r) {
        double dr = s.deltas[r];
        if (dr == 0.0) continue;
        double* dw = d_params + l.weight_offset + size_t(r) * l.in;
        for (int c = 0; c < l.in; ++c) dw[c] += dr * input[c];
        d_params[l.bias_offset + r] += dr;
      }
    }
    bool need_down = li > 0 || d_input != nullptr;
    if (!need_down) break;
    if (li == 0) {
      for (int c = 0; c < l.in; ++c) {
        double acc = 0.0;
        for (int r = 0; r < l.out; ++r)
          acc += s.deltas[r] * params_[l.weight_offset + size_t(r) * l.in + c];
        d_input[c] += acc;
      }
    } else {
      s.deltas_next.assign(l.in, 0.0);
      for (int r = 0; r < l.out; ++r) {
        double dr = s.deltas[r];
        if (dr == 0.0) continue;
        const double* w = params_.data() + l.weight_offset + size_t(r) * l.in;
        for (int c = 0; c < l.in; ++c) s.deltas_next[c] += dr * w[c];
      }
      std::copy(s.deltas_next.begin(), s.deltas_next.end(), s.deltas.begin());
    }
  }
}

void Decoder::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("model file: cannot open " + path + " for write");
  os.write(kModelMagic, 8);
  write_pod(os, kModelVersion);
  write_pod(os, int32_t(config_.input_len));
  write_pod(os, int32_t(config_.hidden_layers));
  write_pod(os, int32_t(config_.hidden_width));
  write_pod(os, uint64_t(params_.size()));
  os.write(reinterpret_cast<const char*>(params_.data()),
           std::streamsize(params_.size() * sizeof(double)));
  if (!os) throw FormatError("model file: write failed for " + path);
}

Decoder Decoder::load(const std::string& path, int expected_input_len) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("model file: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kModelMagic, 8) != 0)
    throw FormatError("model file: bad magic in " + path);
  uint32_t version;
  read_pod(is, version);
  if (version != kModelVersion)
    throw FormatError("model file: unsupported version " +
                      std::to_string(version));
  MlpConfig cfg;
  int32_t v;
  read_pod(is, v);
  cfg.input_len = v;
  read_pod(is, v);
  cfg.hidden_layers = v;
  read_pod(is, v);
  cfg.hidden_width = v;
  if (expected_input_len >= 0 && cfg.input_len != expected_input_len)
    throw FormatError("model file: input length " +
                      std::to_string(cfg.input_len) + " does not match field (" +
                      std::to_string(expected_input_len) + ")");
  uint64_t count;
  read_pod(is, count);
  Decoder d(cfg, 0);
  if (count != d.params_.size())
    throw FormatError("model file: parameter count mismatch");
  is.read(reinterpret_cast<char*>(d.params_.data()),
          std::streamsize(count * sizeof(double)));
  if (!is) throw FormatError("model file: truncated parameter block");
  return d;
}

}  // namespace sdfmap
