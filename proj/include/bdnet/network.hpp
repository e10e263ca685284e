#pragma once

#include <cstdint>
#include <vector>

#include "bdnet/tensor.hpp"

namespace bdnet {

enum class LayerKind : std::uint8_t {
  conv2d = 0,
  dense = 1,
  relu = 2,
  maxpool2d = 3,
  softmax = 4,
  flatten = 5,
};

const char* layer_kind_name(LayerKind kind);
bool layer_kind_has_weights(LayerKind kind);

// One network layer. conv2d and dense carry weights and bias; the other
// kinds carry none. Activations are laid out channel-major ({C,H,W}).
//
//   conv2d    weights {OC,IC,KH,KW}, bias {OC}; zero padding, declared stride
//   dense     weights {OUT,IN}, bias {OUT}
//   maxpool2d pool/stride over each channel independently
struct Layer {
  LayerKind kind = LayerKind::relu;
  Tensor weights;
  Tensor bias;
  std::uint32_t stride = 1;       // conv2d
  std::uint32_t padding = 0;      // conv2d
  std::uint32_t pool = 2;         // maxpool2d
  std::uint32_t pool_stride = 2;  // maxpool2d
};

Layer make_conv2d(Tensor weights, Tensor bias, std::uint32_t stride = 1,
                  std::uint32_t padding = 0);
Layer make_dense(Tensor weights, Tensor bias);
Layer make_relu();
Layer make_maxpool2d(std::uint32_t pool, std::uint32_t stride);
Layer make_softmax();
Layer make_flatten();

enum class NetworkMode : std::uint8_t {
  classifier = 0,         // ends in softmax over C classes; last class rejects
  feature_extractor = 1,  // ends in a non-softmax layer producing features
};

struct Network {
  std::vector<Layer> layers;
  std::vector<std::uint32_t> input_shape;
  NetworkMode mode = NetworkMode::classifier;
};

// Output shape of one layer given its input shape. Throws on any
// geometry/weight-shape inconsistency.
std::vector<std::uint32_t> layer_output_shape(
    const Layer& layer, const std::vector<std::uint32_t>& input_shape);

// Walks the whole shape chain and checks the mode tail rule; returns the
// final output shape.
std::vector<std::uint32_t> validate_network(const Network& net);

std::size_t output_size(const Network& net);

// Runs inference. Deterministic: identical inputs produce bit-identical
// outputs. Accumulation inside conv/dense reductions is 64-bit.
Tensor forward(const Network& net, const Tensor& input);

// Applies one layer. Building block of forward; exposed for the trainer,
// which needs per-layer activations.
Tensor forward_layer(const Layer& layer, const Tensor& input);

// Standalone max-pooling over a {C,H,W} tensor.
Tensor maxpool2d(const Tensor& input, std::uint32_t pool, std::uint32_t stride);

// Derives the penultimate-layer feature extractor from a classifier by
// dropping the final dense layer and the softmax behind it.
Network truncate_to_feature_extractor(const Network& classifier);

}  // namespace bdnet
