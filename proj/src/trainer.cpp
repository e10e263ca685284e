#include "bdnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bdnet/rng.hpp"

namespace bdnet {

namespace {

constexpr std::uint64_t kInitSeedTag = 0x1217;
constexpr std::uint64_t kShuffleSeedTag = 0x5481;

void glorot_fill(Tensor& w, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (float& v : w.data) v = static_cast<float>(rng.uniform(-limit, limit));
}

struct LayerGrads {
  std::vector<double> weights;
  std::vector<double> bias;
};

// Gradient of the layer input given the gradient of its output; fills
// parameter gradients for weighted layers. Softmax is folded into the loss
// and never reaches here.
std::vector<double> backward_layer(const Layer& l, const Tensor& in,
                                   const Tensor& out,
                                   const std::vector<double>& gout,
                                   LayerGrads& grads) {
  switch (l.kind) {
    case LayerKind::relu: {
      std::vector<double> gin(gout.size());
      for (std::size_t i = 0; i < gout.size(); ++i)
        gin[i] = in.data[i] > 0.0f ? gout[i] : 0.0;
      return gin;
    }
    case LayerKind::flatten:
      return gout;
    case LayerKind::dense: {
      const std::uint32_t out_n = l.weights.shape[0];
      const std::uint32_t in_n = l.weights.shape[1];
      grads.weights.assign(l.weights.numel(), 0.0);
      grads.bias.assign(out_n, 0.0);
      std::vector<double> gin(in_n, 0.0);
      for (std::uint32_t o = 0; o < out_n; ++o) {
        const double g = gout[o];
        grads.bias[o] = g;
        const std::size_t row = static_cast<std::size_t>(o) * in_n;
        for (std::uint32_t i = 0; i < in_n; ++i) {
          grads.weights[row + i] = g * in.data[i];
          gin[i] += g * l.weights.data[row + i];
        }
      }
      return gin;
    }
    case LayerKind::conv2d: {
      const std::uint32_t oc = l.weights.shape[0];
      const std::uint32_t ic = l.weights.shape[1];
      const std::uint32_t kh = l.weights.shape[2];
      const std::uint32_t kw = l.weights.shape[3];
      const std::uint32_t ih = in.shape[1];
      const std::uint32_t iw = in.shape[2];
      const std::uint32_t oh = out.shape[1];
      const std::uint32_t ow = out.shape[2];
      const std::int64_t pad = l.padding;
      const std::uint32_t stride = l.stride;
      grads.weights.assign(l.weights.numel(), 0.0);
      grads.bias.assign(oc, 0.0);
      std::vector<double> gin(in.numel(), 0.0);
      for (std::uint32_t c = 0; c < oc; ++c) {
        for (std::uint32_t oy = 0; oy < oh; ++oy) {
          for (std::uint32_t ox = 0; ox < ow; ++ox) {
            const double g = gout[(static_cast<std::size_t>(c) * oh + oy) * ow + ox];
            if (g == 0.0) continue;
            grads.bias[c] += g;
            for (std::uint32_t ch = 0; ch < ic; ++ch) {
              const std::size_t wbase =
                  ((static_cast<std::size_t>(c) * ic + ch) * kh) * kw;
              const std::size_t xbase = static_cast<std::size_t>(ch) * ih * iw;
              for (std::uint32_t ky = 0; ky < kh; ++ky) {
                const std::int64_t iy =
                    static_cast<std::int64_t>(oy) * stride + ky - pad;
                if (iy < 0 || iy >= static_cast<std::int64_t>(ih)) continue;
                for (std::uint32_t kx = 0; kx < kw; ++kx) {
                  const std::int64_t ix =
                      static_cast<std::int64_t>(ox) * stride + kx - pad;
                  if (ix < 0 || ix >= static_cast<std::int64_t>(iw)) continue;
                  const std::size_t xi = xbase + iy * iw + ix;
                  grads.weights[wbase + ky * kw + kx] += g * in.data[xi];
                  gin[xi] += g * l.weights.data[wbase + ky * kw + kx];
                }
              }
            }
          }
        }
      }
      return gin;
    }
    case LayerKind::maxpool2d: {
      const std::uint32_t ch = in.shape[0];
      const std::uint32_t ih = in.shape[1];
      const std::uint32_t iw = in.shape[2];
      const std::uint32_t oh = out.shape[1];
      const std::uint32_t ow = out.shape[2];
      const std::uint32_t k = l.pool;
      const std::uint32_t s = l.pool_stride;
      std::vector<double> gin(in.numel(), 0.0);
      for (std::uint32_t c = 0; c < ch; ++c) {
        const std::size_t ibase = static_cast<std::size_t>(c) * ih * iw;
        const std::size_t obase = static_cast<std::size_t>(c) * oh * ow;
        for (std::uint32_t oy = 0; oy < oh; ++oy) {
          for (std::uint32_t ox = 0; ox < ow; ++ox) {
            const float m = out.data[obase + oy * ow + ox];
            // Gradient goes to the first window element matching the max,
            // in scan order.
            for (std::uint32_t ky = 0; ky < k; ++ky) {
              bool routed = false;
              for (std::uint32_t kx = 0; kx < k; ++kx) {
                const std::size_t xi = ibase + (oy * s + ky) * iw + ox * s + kx;
                if (in.data[xi] == m) {
                  gin[xi] += gout[obase + oy * ow + ox];
                  routed = true;
                  break;
                }
              }
              if (routed) break;
            }
          }
        }
      }
      return gin;
    }
    case LayerKind::softmax:
      fail(Status::invalid_argument, "softmax gradient is folded into the loss");
  }
  fail(Status::invalid_argument, "unknown layer kind");
}

}  // namespace

void init_weights(Network& net, std::uint64_t seed) {
  Rng rng(seed_mix({seed, kInitSeedTag}));
  for (Layer& l : net.layers) {
    if (!layer_kind_has_weights(l.kind)) continue;
    double fan_in = 0.0, fan_out = 0.0;
    if (l.kind == LayerKind::conv2d) {
      const auto& s = l.weights.shape;
      fan_in = static_cast<double>(s[1]) * s[2] * s[3];
      fan_out = static_cast<double>(s[0]) * s[2] * s[3];
    } else {
      fan_in = l.weights.shape[1];
      fan_out = l.weights.shape[0];
    }
    glorot_fill(l.weights, fan_in, fan_out, rng);
    std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0f);
  }
}

namespace {

double compute_grads(const Network& net, const Tensor& x, std::uint32_t label,
                     std::vector<LayerGrads>& grads) {
  const std::size_t n = net.layers.size();
  if (n == 0 || net.layers.back().kind != LayerKind::softmax)
    fail(Status::invalid_argument, "training requires a softmax classifier");

  std::vector<Tensor> acts;
  acts.reserve(n);
  acts.push_back(x);
  for (std::size_t i = 0; i + 1 < n; ++i)
    acts.push_back(forward_layer(net.layers[i], acts.back()));

  const Tensor& logits = acts.back();
  const Tensor probs = forward_layer(net.layers[n - 1], logits);
  if (label >= probs.numel())
    fail(Status::invalid_argument, "label " + std::to_string(label) +
                                       " outside the classifier's class range");
  const double p_target = probs.data[label];
  const double loss = -std::log(std::max(p_target, 1e-12));
  if (!std::isfinite(loss)) fail(Status::numeric, "training loss diverged");

  // Softmax + cross-entropy gradient: p - onehot.
  std::vector<double> g(probs.numel());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = static_cast<double>(probs.data[i]) - (i == label ? 1.0 : 0.0);

  grads.assign(n, {});
  for (std::size_t i = n - 1; i-- > 0;)
    g = backward_layer(net.layers[i], acts[i], acts[i + 1], g, grads[i]);
  return loss;
}

}  // namespace

double train_step(Network& net, const Tensor& x, std::uint32_t label, double lr) {
  std::vector<LayerGrads> grads;
  const double loss = compute_grads(net, x, label, grads);
  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
    Layer& l = net.layers[i];
    if (!layer_kind_has_weights(l.kind)) continue;
    for (std::size_t j = 0; j < l.weights.numel(); ++j)
      l.weights.data[j] =
          static_cast<float>(l.weights.data[j] - lr * grads[i].weights[j]);
    for (std::size_t j = 0; j < l.bias.numel(); ++j)
      l.bias.data[j] = static_cast<float>(l.bias.data[j] - lr * grads[i].bias[j]);
  }
  return loss;
}

Network train_fixture(const Network& arch, const Dataset& train,
                      const TrainConfig& cfg,
                      const std::function<void(std::uint32_t, double)>& on_epoch) {
  if (train.empty()) fail(Status::invalid_argument, "training set is empty");
  Network net = arch;
  validate_network(net);
  init_weights(net, cfg.seed);
  check_labels_in_range(train, static_cast<std::uint32_t>(output_size(net)));

  std::vector<LayerGrads> velocity(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    if (!layer_kind_has_weights(l.kind)) continue;
    velocity[i].weights.assign(l.weights.numel(), 0.0);
    velocity[i].bias.assign(l.bias.numel(), 0.0);
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LayerGrads> grads;
  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(seed_mix({cfg.seed, kShuffleSeedTag, epoch}));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      loss_sum += compute_grads(net, train.images[idx], train.labels[idx], grads);
      for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
        Layer& l = net.layers[i];
        if (!layer_kind_has_weights(l.kind)) continue;
        auto& v = velocity[i];
        for (std::size_t j = 0; j < l.weights.numel(); ++j) {
          v.weights[j] = cfg.momentum * v.weights[j] + grads[i].weights[j];
          l.weights.data[j] =
              static_cast<float>(l.weights.data[j] - cfg.lr * v.weights[j]);
        }
        for (std::size_t j = 0; j < l.bias.numel(); ++j) {
          v.bias[j] = cfg.momentum * v.bias[j] + grads[i].bias[j];
          l.bias.data[j] =
              static_cast<float>(l.bias.data[j] - cfg.lr * v.bias[j]);
        }
      }
    }
    if (on_epoch) on_epoch(epoch, loss_sum / static_cast<double>(order.size()));
  }
  return net;
}

double classifier_accuracy(const Network& net, const Dataset& ds) {
  if (ds.empty()) fail(Status::invalid_argument, "empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Tensor probs = forward(net, ds.images[i]);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.numel(); ++c)
      if (probs.data[c] > probs.data[best]) best = c;
    if (best == ds.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

Network make_fixture_arch(std::uint32_t classes) {
  if (classes < 2) fail(Status::invalid_argument, "need at least two classes");
  Network net;
  net.mode = NetworkMode::classifier;
  net.input_shape = {1, 16, 16};
  net.layers.push_back(
      make_conv2d(Tensor::zeros({8, 1, 5, 5}), Tensor::zeros({8})));
  net.layers.push_back(make_relu());
  net.layers.push_back(make_maxpool2d(2, 2));
  net.layers.push_back(
      make_conv2d(Tensor::zeros({12, 8, 3, 3}), Tensor::zeros({12})));
  net.layers.push_back(make_relu());
  net.layers.push_back(make_maxpool2d(2, 2));
  net.layers.push_back(make_flatten());
  net.layers.push_back(make_dense(Tensor::zeros({32, 48}), Tensor::zeros({32})));
  net.layers.push_back(make_relu());
  net.layers.push_back(
      make_dense(Tensor::zeros({classes, 32}), Tensor::zeros({classes})));
  net.layers.push_back(make_softmax());
  validate_network(net);
  return net;
}

}  // namespace bdnet
