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

#ifndef BSEL_MODEL_HPP_
#define BSEL_MODEL_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "bsel/numerics.hpp"

namespace bsel {

/// Fully connected layer, `weight` is out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;

  bool operator==(const DenseLayer&) const = default;
};

/// f(x) = h(x)^T W where h is a ReLU perceptron (possibly empty, giving
/// h(x) = x) and W is the d x k head. The head carries no bias so that the
/// logits are linear in W.
class Network {
 public:
  Network() = default;
  Network(std::size_t input_dim, std::vector<DenseLayer> layers, Matrix head);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t feature_dim() const noexcept { return head_.rows(); }
  std::size_t num_classes() const noexcept { return head_.cols(); }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const Matrix& head() const noexcept { return head_; }
  Matrix& head() noexcept { return head_; }

  /// Every parameter tensor in a fixed order: layer weights and biases
  /// front to back, then the head.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  std::size_t parameter_count() const;

  /// Same architecture, every parameter zero.
  Network zeros_like() const;

  bool operator==(const Network&) const = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;
  Matrix head_;
};

/// Fan-in scaled uniform weights, zero biases. An empty `hidden_widths`
/// gives identity features and requires d == input_dim.
Network init_network(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                     std::size_t d, std::size_t k, std::uint64_t seed);

Vector features(const Network& net, std::span<const double> x);
Vector logits(const Network& net, std::span<const double> x);
/// Head applied to precomputed features.
Vector head_logits(const Network& net, std::span<const double> h);

struct Sample {
  std::span<const double> x;
  std::size_t y;
};

struct ForwardPass {
  std::vector<Vector> features;
  std::vector<Vector> logits;
};

ForwardPass forward_batch(const Network& net, std::span<const Sample> batch);

struct LossAndGrads {
  double loss = 0.0;
  Network grads;
};

/// Mean negative log-likelihood over the batch and its exact gradient.
/// Optional per-example weights give (1/n) sum_i w_i nll_i instead.
LossAndGrads loss_and_grads(const Network& net, std::span<const Sample> batch,
                            std::span<const double> weights = {});

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamWConfig&) const = default;
};

struct OptimizerState {
  AdamWConfig config;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  std::uint64_t step = 0;

  bool operator==(const OptimizerState&) const = default;
};

OptimizerState make_optimizer(const Network& net, const AdamWConfig& config);

/// Adam with bias correction and decoupled weight decay
/// (p <- p - lr * wd * p, then the adaptive step).
void optimizer_step(Network& net, OptimizerState& opt, const Network& grads);

/// ||softmax(f) - onehot(y)|| * ||h(x)||: the exact per-sample gradient norm
/// of the head weights.
double per_sample_grad_norm_bound(const Network& net, std::span<const double> x,
                                  std::size_t y);

}  // namespace bsel

#endif  // BSEL_MODEL_HPP_
