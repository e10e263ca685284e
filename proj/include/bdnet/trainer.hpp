#pragma once

#include <cstdint>
#include <functional>

#include "bdnet/dataset.hpp"
#include "bdnet/network.hpp"

namespace bdnet {

struct TrainConfig {
  std::uint32_t epochs = 16;
  double lr = 0.002;
  double momentum = 0.9;
  std::uint64_t seed = 1;
};

// Glorot-uniform weights, zero biases; deterministic in seed.
void init_weights(Network& net, std::uint64_t seed);

// One SGD step on (x, label) through a classifier net; returns the
// cross-entropy loss before the update.
double train_step(Network& net, const Tensor& x, std::uint32_t label, double lr);

// Initializes the template architecture and runs per-sample SGD with a
// per-epoch reshuffle. Labels must already be classifier class indices.
// Non-finite loss aborts with a numeric error. on_epoch, when set, receives
// (epoch, mean loss).
Network train_fixture(const Network& arch, const Dataset& train,
                      const TrainConfig& cfg,
                      const std::function<void(std::uint32_t, double)>& on_epoch = {});

// Fraction of probes whose argmax class equals the label (ties toward the
// lowest index).
double classifier_accuracy(const Network& net, const Dataset& ds);

// The stock 6-class fixture: conv 8x5x5, pool, conv 12x3x3, pool, dense 32,
// dense `classes`, softmax, over a {1,16,16} input. Weights uninitialized.
Network make_fixture_arch(std::uint32_t classes);

}  // namespace bdnet
