#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "bdnet/network.hpp"
#include "bdnet/rng.hpp"
#include "bdnet/tensor.hpp"
#include "bdnet/trainer.hpp"
#include "support/naive_net.hpp"

using namespace bdnet;

TEST_CASE("tensor construction checks the shape/data contract") {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(Tensor::zeros({4}).data == std::vector<float>(4, 0.0f));
  CHECK_THROWS_AS(Tensor({2, 3}, {1.0f}), Error);
  CHECK_THROWS_AS(Tensor::zeros({0, 3}), Error);
  CHECK_THROWS_AS(Tensor::zeros({}), Error);
}

TEST_CASE("shape helpers") {
  CHECK(shape_numel({2, 3, 4}) == 24);
  CHECK(shape_to_string({1, 16, 16}) == "[1x16x16]");
  CHECK(same_shape(Tensor::zeros({2, 2}), Tensor::zeros({2, 2})));
  CHECK_FALSE(same_shape(Tensor::zeros({4}), Tensor::zeros({2, 2})));
  Tensor bad = Tensor::zeros({2});
  bad.data[1] = std::numeric_limits<float>::infinity();
  CHECK(all_finite(Tensor::zeros({3})));
  CHECK_FALSE(all_finite(bad));
}

TEST_CASE("layer output shapes") {
  Layer conv = make_conv2d(Tensor::zeros({8, 1, 5, 5}), Tensor::zeros({8}));
  CHECK(layer_output_shape(conv, {1, 16, 16}) ==
        std::vector<std::uint32_t>{8, 12, 12});
  Layer padded = make_conv2d(Tensor::zeros({4, 3, 3, 3}), Tensor::zeros({4}),
                             1, 1);
  CHECK(layer_output_shape(padded, {3, 8, 8}) ==
        std::vector<std::uint32_t>{4, 8, 8});
  CHECK(layer_output_shape(make_maxpool2d(2, 2), {8, 12, 12}) ==
        std::vector<std::uint32_t>{8, 6, 6});
  CHECK(layer_output_shape(make_flatten(), {8, 6, 6}) ==
        std::vector<std::uint32_t>{288});
  Layer fc = make_dense(Tensor::zeros({32, 288}), Tensor::zeros({32}));
  CHECK(layer_output_shape(fc, {288}) == std::vector<std::uint32_t>{32});

  CHECK_THROWS_AS(layer_output_shape(conv, {2, 16, 16}), Error);
  CHECK_THROWS_AS(layer_output_shape(conv, {1, 4, 4}), Error);
  CHECK_THROWS_AS(layer_output_shape(fc, {64}), Error);
  CHECK_THROWS_AS(layer_output_shape(make_maxpool2d(5, 2), {1, 4, 4}), Error);
}

namespace {

Network two_dense_relu() {
  Network net;
  net.mode = NetworkMode::classifier;
  net.input_shape = {2};
  net.layers.push_back(make_dense(Tensor({2, 2}, {1.0f, 0.5f, -1.0f, 0.25f}),
                                  Tensor({2}, {0.1f, -0.2f})));
  net.layers.push_back(make_relu());
  net.layers.push_back(make_dense(Tensor({2, 2}, {2.0f, 1.0f, 0.5f, -1.0f}),
                                  Tensor({2}, {0.35f, 2.05f})));
  return net;
}

}  // namespace

TEST_CASE("dense/relu stack against hand arithmetic") {
  Network net = two_dense_relu();
  net.mode = NetworkMode::feature_extractor;
  validate_network(net);
  const Tensor out = forward(net, Tensor({2}, {2.0f, -1.0f}));
  // [2,-1] -> dense [1.6,-2.45] -> relu [1.6,0] -> dense [3.55,2.85]
  CHECK(out.data[0] == doctest::Approx(3.55).epsilon(1e-6));
  CHECK(out.data[1] == doctest::Approx(2.85).epsilon(1e-6));
}

TEST_CASE("conv2d against hand arithmetic") {
  Network net;
  net.mode = NetworkMode::feature_extractor;
  net.input_shape = {1, 3, 3};
  net.layers.push_back(make_conv2d(
      Tensor({1, 1, 2, 2}, {1.0f, 0.0f, 0.0f, -1.0f}), Tensor({1}, {0.5f})));
  const Tensor in({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor out = forward(net, in);
  // Each 2x2 window: top-left - bottom-right + 0.5.
  CHECK(out.shape == std::vector<std::uint32_t>{1, 2, 2});
  CHECK(out.data == std::vector<float>{-3.5f, -3.5f, -3.5f, -3.5f});
}

TEST_CASE("maxpool picks window maxima") {
  const Tensor in({1, 4, 4},
                  {1, 2, 5, 5, 3, 4, 5, 5, -1, -2, 9, 0, -3, -4, 0, 9});
  const Tensor out = maxpool2d(in, 2, 2);
  CHECK(out.data == std::vector<float>{4, 5, -1, 9});
  const Tensor strided = maxpool2d(in, 2, 1);
  CHECK(strided.shape == std::vector<std::uint32_t>{1, 3, 3});
  CHECK(strided.data[0] == 4);
}

TEST_CASE("softmax output is a distribution and shift invariant") {
  Network net;
  net.mode = NetworkMode::classifier;
  net.input_shape = {3};
  net.layers.push_back(make_dense(
      Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}), Tensor::zeros({3})));
  net.layers.push_back(make_softmax());
  const Tensor a = forward(net, Tensor({3}, {1.0f, 2.0f, 3.0f}));
  const Tensor b = forward(net, Tensor({3}, {101.0f, 102.0f, 103.0f}));
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.data[i] > 0.0f);
    CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-5));
    sum += a.data[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(a.data[2] > a.data[1]);
  CHECK(a.data[1] > a.data[0]);

  const Tensor u = forward(net, Tensor({3}, {7.0f, 7.0f, 7.0f}));
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(u.data[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("validate_network reports the offending layer") {
  Network net;
  net.mode = NetworkMode::classifier;
  net.input_shape = {1, 4, 4};
  net.layers.push_back(make_conv2d(Tensor::zeros({2, 1, 3, 3}),
                                   Tensor::zeros({2})));
  net.layers.push_back(make_flatten());
  net.layers.push_back(make_dense(Tensor::zeros({3, 9}), Tensor::zeros({3})));
  net.layers.push_back(make_softmax());
  CHECK_THROWS_WITH_AS(validate_network(net),
                       doctest::Contains("layer 2"), Error);

  Network empty;
  empty.input_shape = {2};
  CHECK_THROWS_AS(validate_network(empty), Error);

  Network no_softmax = two_dense_relu();
  CHECK_THROWS_AS(validate_network(no_softmax), Error);
  no_softmax.mode = NetworkMode::feature_extractor;
  CHECK_NOTHROW(validate_network(no_softmax));
}

TEST_CASE("forward rejects mismatched input and non-finite data") {
  Network net = two_dense_relu();
  net.layers.push_back(make_softmax());
  CHECK_THROWS_AS(forward(net, Tensor::zeros({3})), Error);
  Tensor nan_in = Tensor::zeros({2});
  nan_in.data[0] = std::nanf("");
  CHECK_THROWS_AS(forward(net, nan_in), Error);
}

TEST_CASE("forward matches an independent naive implementation") {
  Rng rng(0xFEEDu);
  for (int trial = 0; trial < 40; ++trial) {
    const Network net = naive::random_small_net(rng, trial % 2 == 0);
    validate_network(net);
    const Tensor in = naive::random_input(net, rng);
    const Tensor got = forward(net, in);
    const std::vector<double> want = naive::forward(net, in);
    REQUIRE(got.numel() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(static_cast<double>(got.data[i]) ==
            doctest::Approx(want[i]).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("forward is bit-deterministic") {
  Rng rng(77);
  const Network net = naive::random_small_net(rng);
  const Tensor in = naive::random_input(net, rng);
  const Tensor a = forward(net, in);
  const Tensor b = forward(net, in);
  CHECK(std::memcmp(a.data.data(), b.data.data(),
                    a.numel() * sizeof(float)) == 0);
}

TEST_CASE("feature extractor truncation drops the classifier head") {
  Network net = make_fixture_arch(6);
  init_weights(net, 3);
  const Network feat = truncate_to_feature_extractor(net);
  CHECK(feat.mode == NetworkMode::feature_extractor);
  CHECK(feat.layers.size() == net.layers.size() - 2);
  const Tensor probe = Tensor::zeros({1, 16, 16});
  const Tensor f = forward(feat, probe);
  CHECK(f.numel() == 32);

  Network tiny;
  tiny.mode = NetworkMode::classifier;
  tiny.input_shape = {2};
  tiny.layers.push_back(make_dense(Tensor::zeros({2, 2}), Tensor::zeros({2})));
  tiny.layers.push_back(make_softmax());
  CHECK_THROWS_AS(truncate_to_feature_extractor(tiny), Error);
}

TEST_CASE("glorot init is deterministic and in range") {
  Network a = make_fixture_arch(6);
  Network b = make_fixture_arch(6);
  init_weights(a, 42);
  init_weights(b, 42);
  CHECK(a.layers[0].weights.data == b.layers[0].weights.data);
  init_weights(b, 43);
  CHECK(a.layers[0].weights.data != b.layers[0].weights.data);

  // conv1 is 8x1x5x5: fan_in 25, fan_out 200, limit sqrt(6/225).
  const double limit = std::sqrt(6.0 / 225.0);
  for (float w : a.layers[0].weights.data) {
    CHECK(std::abs(w) <= limit);
  }
  for (float bias : a.layers[0].bias.data) CHECK(bias == 0.0f);
}

TEST_CASE("fixture architecture geometry") {
  Network net = make_fixture_arch(6);
  const auto out = validate_network(net);
  CHECK(out == std::vector<std::uint32_t>{6});
  CHECK(net.layers[0].weights.numel() == 200);
  CHECK_THROWS_AS(make_fixture_arch(1), Error);
}

TEST_CASE("train_step lowers the loss on a separable toy problem") {
  Network net;
  net.mode = NetworkMode::classifier;
  net.input_shape = {2};
  net.layers.push_back(make_dense(Tensor::zeros({4, 2}), Tensor::zeros({4})));
  net.layers.push_back(make_relu());
  net.layers.push_back(make_dense(Tensor::zeros({2, 4}), Tensor::zeros({2})));
  net.layers.push_back(make_softmax());
  init_weights(net, 9);

  const Tensor x0({2}, {1.0f, 0.0f});
  const Tensor x1({2}, {0.0f, 1.0f});
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double l = train_step(net, x0, 0, 0.1) + train_step(net, x1, 1, 0.1);
    if (i == 0) first = l;
    last = l;
  }
  CHECK(last < first);
  CHECK(last < 0.1);
  CHECK(forward(net, x0).data[0] > 0.9f);
  CHECK(forward(net, x1).data[1] > 0.9f);
}

TEST_CASE("train_step rejects non-classifier nets and bad labels") {
  Network feat = two_dense_relu();
  feat.mode = NetworkMode::feature_extractor;
  CHECK_THROWS_AS(train_step(feat, Tensor::zeros({2}), 0, 0.1), Error);

  Network net = two_dense_relu();
  net.layers.push_back(make_softmax());
  CHECK_THROWS_AS(train_step(net, Tensor::zeros({2}), 7, 0.1), Error);
}

namespace {

Dataset toy_quadrant_dataset(std::size_t per_class) {
  Dataset ds;
  Rng rng(5);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::uint32_t c = 0; c < 2; ++c) {
      Tensor t = Tensor::zeros({2});
      t.data[c] = static_cast<float>(1.0 + rng.uniform(-0.2, 0.2));
      t.data[1 - c] = static_cast<float>(rng.uniform(-0.2, 0.2));
      ds.images.push_back(t);
      ds.labels.push_back(c);
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("train_fixture is deterministic in the seed") {
  Network arch;
  arch.mode = NetworkMode::classifier;
  arch.input_shape = {2};
  arch.layers.push_back(make_dense(Tensor::zeros({4, 2}), Tensor::zeros({4})));
  arch.layers.push_back(make_relu());
  arch.layers.push_back(make_dense(Tensor::zeros({2, 4}), Tensor::zeros({2})));
  arch.layers.push_back(make_softmax());

  const Dataset ds = toy_quadrant_dataset(30);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.lr = 0.05;
  cfg.seed = 11;
  const Network a = train_fixture(arch, ds, cfg);
  const Network b = train_fixture(arch, ds, cfg);
  CHECK(a.layers[0].weights.data == b.layers[0].weights.data);
  CHECK(a.layers[2].weights.data == b.layers[2].weights.data);

  cfg.seed = 12;
  const Network c = train_fixture(arch, ds, cfg);
  CHECK(a.layers[0].weights.data != c.layers[0].weights.data);

  cfg.epochs = 0;
  const Network init_only = train_fixture(arch, ds, cfg);
  Network reference = arch;
  init_weights(reference, cfg.seed);
  CHECK(init_only.layers[0].weights.data ==
        reference.layers[0].weights.data);

  CHECK(classifier_accuracy(a, ds) > 0.95);
  CHECK_THROWS_AS(train_fixture(arch, Dataset{}, cfg), Error);
}

TEST_CASE("epoch callback reports falling mean loss") {
  const Dataset ds = toy_quadrant_dataset(30);
  Network arch;
  arch.mode = NetworkMode::classifier;
  arch.input_shape = {2};
  arch.layers.push_back(make_dense(Tensor::zeros({2, 2}), Tensor::zeros({2})));
  arch.layers.push_back(make_softmax());

  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.lr = 0.05;
  std::vector<double> losses;
  train_fixture(arch, ds, cfg,
                [&](std::uint32_t, double loss) { losses.push_back(loss); });
  REQUIRE(losses.size() == 6);
  CHECK(losses.back() < losses.front());
}
