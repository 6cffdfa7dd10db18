// Copyright 2026 The bsel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bsel/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bsel/error.hpp"

namespace bsel {

namespace {

struct Activations {
  std::vector<Vector> pre;   // z_l per layer
  std::vector<Vector> post;  // a_l per layer, post[0] is the input
};

Activations forward_with_cache(const Network& net, std::span<const double> x) {
  Activations act;
  act.post.emplace_back(x.begin(), x.end());
  for (const DenseLayer& layer : net.layers()) {
    Vector z = layer.weight * act.post.back();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
    Vector a = z;
    for (double& v : a) v = v > 0.0 ? v : 0.0;
    act.pre.push_back(std::move(z));
    act.post.push_back(std::move(a));
  }
  return act;
}

}  // namespace

Network::Network(std::size_t input_dim, std::vector<DenseLayer> layers, Matrix head)
    : input_dim_(input_dim), layers_(std::move(layers)), head_(std::move(head)) {
  std::size_t width = input_dim_;
  for (const DenseLayer& layer : layers_) {
    if (layer.weight.cols() != width || layer.bias.size() != layer.weight.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "layer shapes do not chain");
    }
    width = layer.weight.rows();
  }
  if (head_.rows() != width) {
    throw Error(ErrorCode::ShapeMismatch, "head rows " + std::to_string(head_.rows()) +
                                              " != feature width " + std::to_string(width));
  }
}

std::vector<std::span<double>> Network::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (DenseLayer& layer : layers_) {
    blocks.emplace_back(layer.weight.data());
    blocks.emplace_back(layer.bias);
  }
  blocks.emplace_back(head_.data());
  return blocks;
}

std::vector<std::span<const double>> Network::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (const DenseLayer& layer : layers_) {
    blocks.emplace_back(layer.weight.data());
    blocks.emplace_back(layer.bias);
  }
  blocks.emplace_back(head_.data());
  return blocks;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (auto block : parameter_blocks()) n += block.size();
  return n;
}

Network Network::zeros_like() const {
  Network out = *this;
  for (auto block : out.parameter_blocks()) std::fill(block.begin(), block.end(), 0.0);
  return out;
}

Network init_network(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                     std::size_t d, std::size_t k, std::uint64_t seed) {
  if (input_dim == 0 || d == 0 || k == 0) {
    throw Error(ErrorCode::InvalidDimensions, "network dimensions must be positive");
  }
  for (std::size_t w : hidden_widths) {
    if (w == 0) throw Error(ErrorCode::InvalidDimensions, "zero hidden width");
  }
  if (hidden_widths.empty() && d != input_dim) {
    throw Error(ErrorCode::InvalidDimensions,
                "identity features need d == input_dim (" + std::to_string(d) +
                    " vs " + std::to_string(input_dim) + ")");
  }

  std::mt19937_64 rng(seed);
  auto fill_uniform = [&rng](Matrix& m, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : m.data()) v = u(rng);
  };

  std::vector<DenseLayer> layers;
  if (!hidden_widths.empty()) {
    std::vector<std::size_t> widths = hidden_widths;
    widths.push_back(d);
    std::size_t in = input_dim;
    for (std::size_t out : widths) {
      DenseLayer layer{Matrix(out, in), Vector(out, 0.0)};
      fill_uniform(layer.weight, in);
      layers.push_back(std::move(layer));
      in = out;
    }
  }
  Matrix head(d, k);
  fill_uniform(head, d);
  return Network(input_dim, std::move(layers), std::move(head));
}

Vector features(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) +
                                                  " features, network expects " +
                                                  std::to_string(net.input_dim()));
  }
  Vector a(x.begin(), x.end());
  for (const DenseLayer& layer : net.layers()) {
    Vector z = layer.weight * a;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double v = z[i] + layer.bias[i];
      z[i] = v > 0.0 ? v : 0.0;
    }
    a = std::move(z);
  }
  return a;
}

Vector head_logits(const Network& net, std::span<const double> h) {
  const Matrix& w = net.head();
  if (h.size() != w.rows()) throw Error(ErrorCode::DimensionMismatch, "head_logits");
  Vector f(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double hi = h[i];
    if (hi == 0.0) continue;
    for (std::size_t c = 0; c < w.cols(); ++c) f[c] += hi * w(i, c);
  }
  return f;
}

Vector logits(const Network& net, std::span<const double> x) {
  return head_logits(net, features(net, x));
}

ForwardPass forward_batch(const Network& net, std::span<const Sample> batch) {
  ForwardPass out;
  out.features.reserve(batch.size());
  out.logits.reserve(batch.size());
  for (const Sample& s : batch) {
    out.features.push_back(features(net, s.x));
    out.logits.push_back(head_logits(net, out.features.back()));
  }
  return out;
}

LossAndGrads loss_and_grads(const Network& net, std::span<const Sample> batch,
                            std::span<const double> weights) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss_and_grads on empty batch");
  if (!weights.empty() && weights.size() != batch.size()) {
    throw Error(ErrorCode::ShapeMismatch, "weights do not match batch size");
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossAndGrads out{0.0, net.zeros_like()};
  Matrix& grad_head = out.grads.head();
  const Matrix& head = net.head();

  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Sample& s = batch[n];
    if (s.x.size() != net.input_dim()) {
      throw Error(ErrorCode::DimensionMismatch, "sample width in loss_and_grads");
    }
    const double w = weights.empty() ? 1.0 : weights[n];
    const Activations act = forward_with_cache(net, s.x);
    const Vector& h = act.post.back();
    const Vector f = head_logits(net, h);
    const Vector lsm = log_softmax(f);
    if (s.y >= f.size()) throw Error(ErrorCode::IndexOutOfRange, "label out of range");
    out.loss -= w * inv_n * lsm[s.y];

    Vector df(f.size());
    for (std::size_t c = 0; c < f.size(); ++c) {
      df[c] = w * inv_n * (std::exp(lsm[c]) - (c == s.y ? 1.0 : 0.0));
    }
    Vector dh(h.size(), 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) {
      for (std::size_t c = 0; c < f.size(); ++c) {
        grad_head(i, c) += h[i] * df[c];
        dh[i] += head(i, c) * df[c];
      }
    }

    Vector upstream = std::move(dh);
    for (std::size_t l = net.layers().size(); l-- > 0;) {
      const DenseLayer& layer = net.layers()[l];
      DenseLayer& g = out.grads.layers()[l];
      const Vector& z = act.pre[l];
      const Vector& a_in = act.post[l];
      Vector dz(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) dz[i] = z[i] > 0.0 ? upstream[i] : 0.0;
      Vector da(a_in.size(), 0.0);
      for (std::size_t i = 0; i < dz.size(); ++i) {
        if (dz[i] == 0.0) continue;
        g.bias[i] += dz[i];
        auto wrow = layer.weight.row(i);
        auto grow = g.weight.row(i);
        for (std::size_t j = 0; j < a_in.size(); ++j) {
          grow[j] += dz[i] * a_in[j];
          da[j] += wrow[j] * dz[i];
        }
      }
      upstream = std::move(da);
    }
  }
  return out;
}

OptimizerState make_optimizer(const Network& net, const AdamWConfig& config) {
  OptimizerState opt;
  opt.config = config;
  for (auto block : net.parameter_blocks()) {
    opt.first_moment.emplace_back(block.size(), 0.0);
    opt.second_moment.emplace_back(block.size(), 0.0);
  }
  return opt;
}

void optimizer_step(Network& net, OptimizerState& opt, const Network& grads) {
  auto params = net.parameter_blocks();
  const auto g = grads.parameter_blocks();
  if (params.size() != g.size() || params.size() != opt.first_moment.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer_step: parameter block count");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != g[b].size() || params[b].size() != opt.first_moment[b].size()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "optimizer_step: block " + std::to_string(b) + " size");
    }
  }

  const AdamWConfig& c = opt.config;
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  const double decay = 1.0 - c.lr * c.weight_decay;
  for (std::size_t b = 0; b < params.size(); ++b) {
    Vector& m = opt.first_moment[b];
    Vector& v = opt.second_moment[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double gi = g[b][i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      params[b][i] = params[b][i] * decay - c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

double per_sample_grad_norm_bound(const Network& net, std::span<const double> x,
                                  std::size_t y) {
  const Vector h = features(net, x);
  const Vector g = softmax_ce_grad(head_logits(net, h), y);
  return norm2(g) * norm2(h);
}

}  // namespace bsel
