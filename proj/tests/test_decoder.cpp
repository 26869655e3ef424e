#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sdfmap/decoder.hpp"
#include "sdfmap/errors.hpp"
#include "sdfmap/rng.hpp"

using namespace sdfmap;

TEST_CASE("parameter count matches the architecture") {
  MlpConfig cfg{8, 2, 32};
  Decoder dec(cfg, 1);
  CHECK(dec.param_count() == size_t(8 * 32 + 32 + 32 * 32 + 32 + 32 * 1 + 1));

  MlpConfig tiny{3, 1, 4};
  Decoder dec2(tiny, 1);
  CHECK(dec2.param_count() == size_t(3 * 4 + 4 + 4 * 1 + 1));
}

TEST_CASE("forward matches the naive layer-walk oracle") {
  MlpConfig cfg{6, 2, 16};
  Decoder dec(cfg, 77);
  Rng rng(3);
  std::vector<double> input(6);
  for (int trial = 0; trial < 200; ++trial) {
    for (double& v : input) v = uniform_in(rng, -2, 2);
    double got = dec.forward(input);
    double want = oracle::mlp_forward_naive(cfg, dec.params(), input);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("init is seed-deterministic and bounded by fan-in") {
  MlpConfig cfg{8, 2, 32};
  Decoder a(cfg, 42), b(cfg, 42), c(cfg, 43);
  bool all_equal = true, any_diff = false;
  for (size_t i = 0; i < a.param_count(); ++i) {
    all_equal = all_equal && (a.params()[i] == b.params()[i]);
    any_diff = any_diff || (a.params()[i] != c.params()[i]);
  }
  CHECK(all_equal);
  CHECK(any_diff);

  // First layer weights bounded by sqrt(6/8); its biases zero.
  double bound = std::sqrt(6.0 / 8.0) + 1e-12;
  for (int i = 0; i < 8 * 32; ++i) CHECK(std::abs(a.params()[i]) <= bound);
  for (int i = 8 * 32; i < 8 * 32 + 32; ++i) CHECK(a.params()[i] == 0.0);
}

TEST_CASE("backward gradients match finite differences") {
  MlpConfig cfg{5, 2, 8};
  Decoder dec(cfg, 11);
  Rng rng(13);
  std::vector<double> input(5);
  for (double& v : input) v = uniform_in(rng, -1, 1);
  const double upstream = 1.7;

  std::vector<double> d_params(dec.param_count(), 0.0);
  std::vector<double> d_input(5, 0.0);
  dec.backward(input, upstream, d_params.data(), d_input.data());

  for (size_t p = 0; p < dec.param_count(); ++p) {
    double fd = oracle::central_fd(&dec.params()[p], 1e-6,
                                   [&] { return upstream * dec.forward(input); });
    CHECK(d_params[p] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
  for (size_t i = 0; i < input.size(); ++i) {
    double fd = oracle::central_fd(&input[i], 1e-6,
                                   [&] { return upstream * dec.forward(input); });
    CHECK(d_input[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("backward accumulates instead of overwriting") {
  MlpConfig cfg{3, 1, 4};
  Decoder dec(cfg, 2);
  std::vector<double> input = {0.3, -0.1, 0.8};
  std::vector<double> once(dec.param_count(), 0.0), twice(dec.param_count(), 0.0);
  dec.backward(input, 1.0, once.data(), nullptr);
  dec.backward(input, 1.0, twice.data(), nullptr);
  dec.backward(input, 1.0, twice.data(), nullptr);
  for (size_t i = 0; i < once.size(); ++i)
    CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
}

TEST_CASE("save/load roundtrip and input-length enforcement") {
  auto dir = oracle::test_dir("decoder_io");
  MlpConfig cfg{8, 2, 16};
  Decoder dec(cfg, 5);
  std::string path = (dir / "mlp.bin").string();
  dec.save(path);

  Decoder loaded = Decoder::load(path);
  CHECK(loaded.config().input_len == 8);
  CHECK(loaded.config().hidden_layers == 2);
  CHECK(loaded.config().hidden_width == 16);
  REQUIRE(loaded.param_count() == dec.param_count());
  for (size_t i = 0; i < dec.param_count(); ++i)
    CHECK(loaded.params()[i] == dec.params()[i]);

  CHECK_NOTHROW(Decoder::load(path, 8));
  CHECK_THROWS_AS(Decoder::load(path, 12), FormatError);
  CHECK_THROWS_AS(Decoder::load((dir / "absent.bin").string()), FormatError);
}

TEST_CASE("rigged passthrough decoder") {
  // First hidden unit forwards feature[0], everything else zeroed; output
  // reads that unit. For positive inputs the net is the identity on
  // feature[0], which later tests lean on.
  MlpConfig cfg{2, 2, 4};
  Decoder dec(cfg, 0);
  std::fill(dec.params().begin(), dec.params().end(), 0.0);
  // layer 0: weights [4][2] rows; unit 0 reads input 0.
  dec.params()[0] = 1.0;
  // layer 1: weights [4][4] at offset 4*2+4; unit 0 reads unit 0.
  size_t off1 = 4 * 2 + 4;
  dec.params()[off1 + 0] = 1.0;
  // output layer: weights [1][4] at off1 + 4*4+4.
  size_t off2 = off1 + 4 * 4 + 4;
  dec.params()[off2 + 0] = 1.0;

  std::vector<double> in = {0.37, -5.0};
  CHECK(dec.forward(in) == doctest::Approx(0.37).epsilon(1e-15));
  in[0] = -0.4;  // ReLU squashes negatives to zero
  CHECK(dec.forward(in) == 0.0);
}
