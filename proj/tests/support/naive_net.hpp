#pragma once

// Reference forward pass written independently of the library's layer
// dispatch: plain nested loops, no shared helpers, float accumulation. Used
// to cross-check bdnet::forward on randomly generated small networks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bdnet/network.hpp"
#include "bdnet/rng.hpp"

namespace naive {

struct Image {
  std::size_t c = 0, h = 0, w = 0;
  std::vector<double> v;

  double at(std::size_t ci, std::size_t y, std::size_t x) const {
    return v[(ci * h + y) * w + x];
  }
  double& at(std::size_t ci, std::size_t y, std::size_t x) {
    return v[(ci * h + y) * w + x];
  }
};

inline Image from_tensor(const bdnet::Tensor& t) {
  Image im;
  if (t.shape.size() == 3) {
    im.c = t.shape[0];
    im.h = t.shape[1];
    im.w = t.shape[2];
  } else {
    im.c = t.numel();
    im.h = 1;
    im.w = 1;
  }
  im.v.assign(t.data.begin(), t.data.end());
  return im;
}

inline Image conv2d(const Image& in, const bdnet::Layer& l) {
  const std::size_t oc = l.weights.shape[0];
  const std::size_t ic = l.weights.shape[1];
  const std::size_t kh = l.weights.shape[2];
  const std::size_t kw = l.weights.shape[3];
  const std::size_t s = l.stride;
  const std::size_t p = l.padding;
  Image out;
  out.c = oc;
  out.h = (in.h + 2 * p - kh) / s + 1;
  out.w = (in.w + 2 * p - kw) / s + 1;
  out.v.assign(out.c * out.h * out.w, 0.0);
  for (std::size_t o = 0; o < oc; ++o)
    for (std::size_t y = 0; y < out.h; ++y)
      for (std::size_t x = 0; x < out.w; ++x) {
        double acc = l.bias.data[o];
        for (std::size_t i = 0; i < ic; ++i)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const std::ptrdiff_t sy =
                  static_cast<std::ptrdiff_t>(y * s + ky) -
                  static_cast<std::ptrdiff_t>(p);
              const std::ptrdiff_t sx =
                  static_cast<std::ptrdiff_t>(x * s + kx) -
                  static_cast<std::ptrdiff_t>(p);
              if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(in.h) ||
                  sx >= static_cast<std::ptrdiff_t>(in.w))
                continue;
              const double wv =
                  l.weights.data[((o * ic + i) * kh + ky) * kw + kx];
              acc += wv * in.at(i, static_cast<std::size_t>(sy),
                                static_cast<std::size_t>(sx));
            }
        out.at(o, y, x) = acc;
      }
  return out;
}

inline Image maxpool(const Image& in, const bdnet::Layer& l) {
  const std::size_t k = l.pool;
  const std::size_t s = l.pool_stride;
  Image out;
  out.c = in.c;
  out.h = (in.h - k) / s + 1;
  out.w = (in.w - k) / s + 1;
  out.v.assign(out.c * out.h * out.w, 0.0);
  for (std::size_t c = 0; c < in.c; ++c)
    for (std::size_t y = 0; y < out.h; ++y)
      for (std::size_t x = 0; x < out.w; ++x) {
        double best = in.at(c, y * s, x * s);
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx)
            best = std::max(best, in.at(c, y * s + ky, x * s + kx));
        out.at(c, y, x) = best;
      }
  return out;
}

inline Image dense(const Image& in, const bdnet::Layer& l) {
  const std::size_t rows = l.weights.shape[0];
  const std::size_t cols = l.weights.shape[1];
  Image out;
  out.c = rows;
  out.h = 1;
  out.w = 1;
  out.v.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = l.bias.data[r];
    for (std::size_t cidx = 0; cidx < cols; ++cidx)
      acc += static_cast<double>(l.weights.data[r * cols + cidx]) * in.v[cidx];
    out.v[r] = acc;
  }
  return out;
}

inline Image relu(Image in) {
  for (double& x : in.v) x = x > 0.0 ? x : 0.0;
  return in;
}

inline Image softmax(Image in) {
  double mx = in.v[0];
  for (double x : in.v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double& x : in.v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : in.v) x /= sum;
  return in;
}

inline std::vector<double> forward(const bdnet::Network& net,
                                   const bdnet::Tensor& input) {
  Image im = from_tensor(input);
  for (const auto& l : net.layers) {
    switch (l.kind) {
      case bdnet::LayerKind::conv2d: im = conv2d(im, l); break;
      case bdnet::LayerKind::dense: im = dense(im, l); break;
      case bdnet::LayerKind::relu: im = relu(std::move(im)); break;
      case bdnet::LayerKind::maxpool2d: im = maxpool(im, l); break;
      case bdnet::LayerKind::softmax: im = softmax(std::move(im)); break;
      case bdnet::LayerKind::flatten:
        im.c = im.v.size();
        im.h = im.w = 1;
        break;
    }
  }
  return im.v;
}

// Random conv/pool/dense stacks over small inputs, weights in [-1, 1].
inline bdnet::Network random_small_net(bdnet::Rng& rng,
                                       bool classifier_tail = true) {
  using namespace bdnet;
  Network net;
  net.mode = NetworkMode::classifier;
  const std::uint32_t ic = 1 + static_cast<std::uint32_t>(rng.below(2));
  const std::uint32_t hw = 6 + static_cast<std::uint32_t>(rng.below(5));
  net.input_shape = {ic, hw, hw};

  const auto filled = [&](std::vector<std::uint32_t> shape) {
    Tensor t = Tensor::zeros(shape);
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
  };

  std::vector<std::uint32_t> shape = net.input_shape;
  const std::size_t conv_blocks = 1 + rng.below(2);
  for (std::size_t b = 0; b < conv_blocks; ++b) {
    const std::uint32_t oc = 1 + static_cast<std::uint32_t>(rng.below(3));
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.below(2));
    if (shape[1] < k || shape[2] < k) break;
    const std::uint32_t padding = static_cast<std::uint32_t>(rng.below(2));
    net.layers.push_back(make_conv2d(filled({oc, shape[0], k, k}),
                                     filled({oc}), 1, padding));
    shape = layer_output_shape(net.layers.back(), shape);
    if (rng.below(2)) net.layers.push_back(make_relu());
    if (shape[1] >= 2 && shape[2] >= 2 && shape[1] % 2 == 0 &&
        shape[2] % 2 == 0 && rng.below(2)) {
      net.layers.push_back(make_maxpool2d(2, 2));
      shape = layer_output_shape(net.layers.back(), shape);
    }
  }
  net.layers.push_back(make_flatten());
  const std::uint32_t flat = shape[0] * shape[1] * shape[2];
  const std::uint32_t classes = 2 + static_cast<std::uint32_t>(rng.below(3));
  net.layers.push_back(make_dense(filled({classes, flat}), filled({classes})));
  if (classifier_tail) net.layers.push_back(make_softmax());
  else net.mode = NetworkMode::feature_extractor;
  return net;
}

inline bdnet::Tensor random_input(const bdnet::Network& net, bdnet::Rng& rng) {
  bdnet::Tensor t = bdnet::Tensor::zeros(net.input_shape);
  for (float& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

}  // namespace naive
