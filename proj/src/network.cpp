#include "bdnet/network.hpp"

#include <algorithm>
#include <cmath>

namespace bdnet {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::softmax: return "softmax";
    case LayerKind::flatten: return "flatten";
  }
  return "unknown";
}

bool layer_kind_has_weights(LayerKind kind) {
  return kind == LayerKind::conv2d || kind == LayerKind::dense;
}

Layer make_conv2d(Tensor weights, Tensor bias, std::uint32_t stride,
                  std::uint32_t padding) {
  if (weights.shape.size() != 4)
    fail(Status::invalid_argument, "conv2d weights must be {OC,IC,KH,KW}, got " +
                                       shape_to_string(weights.shape));
  if (bias.shape.size() != 1 || bias.shape[0] != weights.shape[0])
    fail(Status::invalid_argument, "conv2d bias must be {OC}");
  if (stride == 0) fail(Status::config, "conv2d stride must be positive");
  Layer l;
  l.kind = LayerKind::conv2d;
  l.weights = std::move(weights);
  l.bias = std::move(bias);
  l.stride = stride;
  l.padding = padding;
  return l;
}

Layer make_dense(Tensor weights, Tensor bias) {
  if (weights.shape.size() != 2)
    fail(Status::invalid_argument, "dense weights must be {OUT,IN}, got " +
                                       shape_to_string(weights.shape));
  if (bias.shape.size() != 1 || bias.shape[0] != weights.shape[0])
    fail(Status::invalid_argument, "dense bias must be {OUT}");
  Layer l;
  l.kind = LayerKind::dense;
  l.weights = std::move(weights);
  l.bias = std::move(bias);
  return l;
}

Layer make_relu() {
  Layer l;
  l.kind = LayerKind::relu;
  return l;
}

Layer make_maxpool2d(std::uint32_t pool, std::uint32_t stride) {
  if (pool == 0 || stride == 0)
    fail(Status::config, "maxpool2d pool and stride must be positive");
  Layer l;
  l.kind = LayerKind::maxpool2d;
  l.pool = pool;
  l.pool_stride = stride;
  return l;
}

Layer make_softmax() {
  Layer l;
  l.kind = LayerKind::softmax;
  return l;
}

Layer make_flatten() {
  Layer l;
  l.kind = LayerKind::flatten;
  return l;
}

std::vector<std::uint32_t> layer_output_shape(
    const Layer& layer, const std::vector<std::uint32_t>& in) {
  switch (layer.kind) {
    case LayerKind::conv2d: {
      if (in.size() != 3)
        fail(Status::shape_mismatch, "conv2d expects a {C,H,W} input, got " +
                                         shape_to_string(in));
      const std::uint32_t oc = layer.weights.shape[0];
      const std::uint32_t ic = layer.weights.shape[1];
      const std::uint32_t kh = layer.weights.shape[2];
      const std::uint32_t kw = layer.weights.shape[3];
      if (in[0] != ic)
        fail(Status::shape_mismatch,
             "conv2d input has " + std::to_string(in[0]) + " channels, weights expect " +
                 std::to_string(ic));
      const std::uint32_t h = in[1] + 2 * layer.padding;
      const std::uint32_t w = in[2] + 2 * layer.padding;
      if (h < kh || w < kw)
        fail(Status::config, "conv2d kernel larger than padded input");
      return {oc, (h - kh) / layer.stride + 1, (w - kw) / layer.stride + 1};
    }
    case LayerKind::dense: {
      if (in.size() != 1)
        fail(Status::shape_mismatch,
             "dense expects a flat input, got " + shape_to_string(in));
      if (in[0] != layer.weights.shape[1])
        fail(Status::shape_mismatch,
             "dense input length " + std::to_string(in[0]) + " does not match weights " +
                 shape_to_string(layer.weights.shape));
      return {layer.weights.shape[0]};
    }
    case LayerKind::relu:
      return in;
    case LayerKind::maxpool2d: {
      if (in.size() != 3)
        fail(Status::shape_mismatch, "maxpool2d expects a {C,H,W} input, got " +
                                         shape_to_string(in));
      const std::uint32_t k = layer.pool;
      const std::uint32_t s = layer.pool_stride;
      if (in[1] < k || in[2] < k || (in[1] - k) % s != 0 || (in[2] - k) % s != 0)
        fail(Status::config, "maxpool2d geometry invalid for input " +
                                 shape_to_string(in));
      return {in[0], (in[1] - k) / s + 1, (in[2] - k) / s + 1};
    }
    case LayerKind::softmax:
      if (in.size() != 1)
        fail(Status::shape_mismatch,
             "softmax expects a flat input, got " + shape_to_string(in));
      return in;
    case LayerKind::flatten:
      return {static_cast<std::uint32_t>(shape_numel(in))};
  }
  fail(Status::invalid_argument, "unknown layer kind");
}

std::vector<std::uint32_t> validate_network(const Network& net) {
  if (net.layers.empty()) fail(Status::invalid_argument, "network has no layers");
  check_shape_valid(net.input_shape);
  std::vector<std::uint32_t> shape = net.input_shape;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    if (layer_kind_has_weights(l.kind)) {
      if (l.weights.empty() || l.bias.empty())
        fail(Status::invalid_argument, std::string(layer_kind_name(l.kind)) +
                                           " layer " + std::to_string(i) +
                                           " is missing weights or bias");
    } else if (!l.weights.empty() || !l.bias.empty()) {
      fail(Status::invalid_argument, std::string(layer_kind_name(l.kind)) +
                                         " layer " + std::to_string(i) +
                                         " must not carry weights");
    }
    try {
      shape = layer_output_shape(l, shape);
    } catch (const Error& e) {
      fail(e.status(), "layer " + std::to_string(i) + ": " + e.what());
    }
  }
  const LayerKind last = net.layers.back().kind;
  if (net.mode == NetworkMode::classifier && last != LayerKind::softmax)
    fail(Status::invalid_argument, "classifier network must end in softmax");
  if (net.mode == NetworkMode::feature_extractor && last == LayerKind::softmax)
    fail(Status::invalid_argument,
         "feature extractor network must not end in softmax");
  return shape;
}

std::size_t output_size(const Network& net) {
  return shape_numel(validate_network(net));
}

namespace {

Tensor conv2d_forward(const Layer& l, const Tensor& in) {
  const auto out_shape = layer_output_shape(l, in.shape);
  const std::uint32_t oc = l.weights.shape[0];
  const std::uint32_t ic = l.weights.shape[1];
  const std::uint32_t kh = l.weights.shape[2];
  const std::uint32_t kw = l.weights.shape[3];
  const std::uint32_t ih = in.shape[1];
  const std::uint32_t iw = in.shape[2];
  const std::uint32_t oh = out_shape[1];
  const std::uint32_t ow = out_shape[2];
  const std::int64_t pad = l.padding;
  const std::uint32_t stride = l.stride;

  Tensor out = Tensor::zeros(out_shape);
  const float* w = l.weights.data.data();
  const float* x = in.data.data();
  for (std::uint32_t c = 0; c < oc; ++c) {
    const float b = l.bias.data[c];
    for (std::uint32_t oy = 0; oy < oh; ++oy) {
      for (std::uint32_t ox = 0; ox < ow; ++ox) {
        double acc = b;
        for (std::uint32_t g = 0; g < ic; ++g) {
          const float* wrow = w + ((static_cast<std::size_t>(c) * ic + g) * kh) * kw;
          const float* xplane = x + static_cast<std::size_t>(g) * ih * iw;
          for (std::uint32_t ky = 0; ky < kh; ++ky) {
            const std::int64_t iy = static_cast<std::int64_t>(oy) * stride + ky - pad;
            if (iy < 0 || iy >= static_cast<std::int64_t>(ih)) continue;
            for (std::uint32_t kx = 0; kx < kw; ++kx) {
              const std::int64_t ix = static_cast<std::int64_t>(ox) * stride + kx - pad;
              if (ix < 0 || ix >= static_cast<std::int64_t>(iw)) continue;
              acc += static_cast<double>(wrow[ky * kw + kx]) *
                     static_cast<double>(xplane[iy * iw + ix]);
            }
          }
        }
        out.data[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] =
            static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor dense_forward(const Layer& l, const Tensor& in) {
  const std::uint32_t out_n = l.weights.shape[0];
  const std::uint32_t in_n = l.weights.shape[1];
  Tensor out = Tensor::zeros({out_n});
  const float* w = l.weights.data.data();
  for (std::uint32_t o = 0; o < out_n; ++o) {
    double acc = l.bias.data[o];
    const float* wrow = w + static_cast<std::size_t>(o) * in_n;
    for (std::uint32_t i = 0; i < in_n; ++i)
      acc += static_cast<double>(wrow[i]) * static_cast<double>(in.data[i]);
    out.data[o] = static_cast<float>(acc);
  }
  return out;
}

Tensor softmax_forward(const Tensor& in) {
  Tensor out = Tensor::zeros(in.shape);
  double max_v = -HUGE_VAL;
  for (float v : in.data) max_v = std::max(max_v, static_cast<double>(v));
  double sum = 0.0;
  std::vector<double> e(in.data.size());
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    e[i] = std::exp(static_cast<double>(in.data[i]) - max_v);
    sum += e[i];
  }
  for (std::size_t i = 0; i < in.data.size(); ++i)
    out.data[i] = static_cast<float>(e[i] / sum);
  return out;
}

}  // namespace

Tensor maxpool2d(const Tensor& input, std::uint32_t pool, std::uint32_t stride) {
  Layer l = make_maxpool2d(pool, stride);
  const auto out_shape = layer_output_shape(l, input.shape);
  const std::uint32_t ch = input.shape[0];
  const std::uint32_t ih = input.shape[1];
  const std::uint32_t iw = input.shape[2];
  const std::uint32_t oh = out_shape[1];
  const std::uint32_t ow = out_shape[2];
  Tensor out = Tensor::zeros(out_shape);
  for (std::uint32_t c = 0; c < ch; ++c) {
    const float* plane = input.data.data() + static_cast<std::size_t>(c) * ih * iw;
    for (std::uint32_t oy = 0; oy < oh; ++oy) {
      for (std::uint32_t ox = 0; ox < ow; ++ox) {
        float m = plane[(oy * stride) * iw + (ox * stride)];
        for (std::uint32_t ky = 0; ky < pool; ++ky)
          for (std::uint32_t kx = 0; kx < pool; ++kx)
            m = std::max(m, plane[(oy * stride + ky) * iw + (ox * stride + kx)]);
        out.data[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = m;
      }
    }
  }
  return out;
}

Tensor forward_layer(const Layer& l, const Tensor& in) {
  switch (l.kind) {
    case LayerKind::conv2d:
      return conv2d_forward(l, in);
    case LayerKind::dense:
      return dense_forward(l, in);
    case LayerKind::relu: {
      Tensor out = in;
      for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
      return out;
    }
    case LayerKind::maxpool2d:
      return maxpool2d(in, l.pool, l.pool_stride);
    case LayerKind::softmax:
      return softmax_forward(in);
    case LayerKind::flatten: {
      Tensor out = in;
      out.shape = {static_cast<std::uint32_t>(out.data.size())};
      return out;
    }
  }
  fail(Status::invalid_argument, "unknown layer kind");
}

Tensor forward(const Network& net, const Tensor& input) {
  if (input.shape != net.input_shape)
    fail(Status::shape_mismatch, "input shape " + shape_to_string(input.shape) +
                                     " does not match network input " +
                                     shape_to_string(net.input_shape));
  if (!all_finite(input))
    fail(Status::numeric, "input tensor contains non-finite values");

  Tensor act = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    act = forward_layer(net.layers[i], act);
    if (!all_finite(act))
      fail(Status::numeric, "non-finite activation produced by layer " +
                                std::to_string(i) + " (" +
                                layer_kind_name(net.layers[i].kind) + ")");
  }
  return act;
}

Network truncate_to_feature_extractor(const Network& classifier) {
  if (classifier.mode != NetworkMode::classifier)
    fail(Status::invalid_argument, "expected a classifier network");
  const auto& ls = classifier.layers;
  if (ls.size() < 3 || ls.back().kind != LayerKind::softmax ||
      ls[ls.size() - 2].kind != LayerKind::dense)
    fail(Status::invalid_argument,
         "classifier must end in a dense layer followed by softmax");
  Network features;
  features.mode = NetworkMode::feature_extractor;
  features.input_shape = classifier.input_shape;
  features.layers.assign(ls.begin(), ls.end() - 2);
  validate_network(features);
  return features;
}

}  // namespace bdnet
