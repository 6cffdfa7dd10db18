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

#include <cmath>
#include <random>

#include "bsel/error.hpp"
#include "bsel/model.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bsel;
using bsel::testing::random_vector;

namespace {

// Independent scalar forward pass straight off the stored weights.
Vector scalar_features(const Network& net, const Vector& x) {
  Vector a = x;
  for (const DenseLayer& layer : net.layers()) {
    Vector next(layer.weight.rows());
    for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
      double s = layer.bias[o];
      for (std::size_t i = 0; i < layer.weight.cols(); ++i) s += layer.weight(o, i) * a[i];
      next[o] = s > 0.0 ? s : 0.0;
    }
    a = std::move(next);
  }
  return a;
}

double batch_loss(const Network& net, const std::vector<Sample>& batch) {
  double s = 0.0;
  for (const Sample& b : batch) s -= log_softmax(logits(net, b.x))[b.y];
  return s / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("init_network is deterministic and validates dimensions") {
  const Network a = init_network(5, {8, 6}, 4, 3, 17);
  const Network b = init_network(5, {8, 6}, 4, 3, 17);
  CHECK(a == b);
  CHECK_FALSE(a == init_network(5, {8, 6}, 4, 3, 18));
  CHECK(a.feature_dim() == 4);
  CHECK(a.num_classes() == 3);
  CHECK(a.parameter_count() == 5 * 8 + 8 + 8 * 6 + 6 + 6 * 4 + 4 + 4 * 3);
  for (const DenseLayer& l : a.layers())
    for (double v : l.bias) CHECK(v == 0.0);
  // Fan-in scaled uniform.
  for (double w : a.layers()[0].weight.data()) CHECK(std::abs(w) <= 1.0 / std::sqrt(5.0));

  CHECK_THROWS_AS(init_network(5, {}, 4, 3, 1), Error);
  CHECK_THROWS_AS(init_network(0, {4}, 4, 3, 1), Error);
  try {
    init_network(5, {8}, 4, 0, 1);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidDimensions);
  }
}

TEST_CASE("depth-zero network is linear with identity features") {
  const Network net = init_network(3, {}, 3, 2, 4);
  const Vector x{0.3, -1.2, 2.0};
  CHECK(features(net, x) == x);
  const Vector f = logits(net, x);
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0;
    for (std::size_t i = 0; i < 3; ++i) s += x[i] * net.head()(i, c);
    CHECK(f[c] == doctest::Approx(s).epsilon(1e-15));
  }
}

TEST_CASE("zero input gives zero features and logits") {
  const Network net = init_network(4, {7, 5}, 3, 2, 9);
  const Vector zero(4, 0.0);
  for (double v : features(net, zero)) CHECK(v == 0.0);
  for (double v : logits(net, zero)) CHECK(v == 0.0);
}

TEST_CASE("features agree with an independent scalar evaluation") {
  std::mt19937_64 rng(1);
  const Network net = init_network(6, {10, 9}, 5, 4, 2);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(6, rng);
    const Vector h = features(net, x);
    const Vector oracle = scalar_features(net, x);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(h[i] - oracle[i]) <= 1e-12);
  }
}

TEST_CASE("logits hand case, zero head, linearity in the head") {
  Network net = init_network(1, {}, 1, 2, 0);
  net.head()(0, 0) = 3.0;
  net.head()(0, 1) = -1.0;
  const Vector f = head_logits(net, Vector{2.0});
  CHECK(f == Vector{6.0, -2.0});

  std::mt19937_64 rng(6);
  Network a = init_network(4, {6}, 3, 3, 5);
  for (double& v : a.head().data()) v = 0.0;
  for (double v : logits(a, random_vector(4, rng))) CHECK(v == 0.0);

  Network w1 = init_network(4, {6}, 3, 3, 5);
  Network w2 = w1;
  for (double& v : w2.head().data()) v = std::normal_distribution<double>(0, 1)(rng);
  Network mix = w1;
  const double ca = 0.7, cb = -1.3;
  for (std::size_t i = 0; i < mix.head().data().size(); ++i) {
    mix.head().data()[i] = ca * w1.head().data()[i] + cb * w2.head().data()[i];
  }
  const Vector x = random_vector(4, rng);
  const Vector f1 = logits(w1, x), f2 = logits(w2, x), fm = logits(mix, x);
  for (std::size_t c = 0; c < 3; ++c) CHECK(fm[c] == doctest::Approx(ca * f1[c] + cb * f2[c]).epsilon(1e-12));
}

TEST_CASE("batch forward equals per-example forward") {
  std::mt19937_64 rng(12);
  const Network net = init_network(3, {5}, 4, 3, 8);
  std::vector<Vector> xs;
  std::vector<Sample> batch;
  for (int i = 0; i < 7; ++i) xs.push_back(random_vector(3, rng));
  for (const Vector& x : xs) batch.push_back({x, 0});
  const ForwardPass fwd = forward_batch(net, batch);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(fwd.features[i] == features(net, xs[i]));
    CHECK(fwd.logits[i] == logits(net, xs[i]));
  }
}

TEST_CASE("loss is log 2 at zero logits") {
  Network net = init_network(2, {}, 2, 2, 1);
  for (double& v : net.head().data()) v = 0.0;
  const Vector x{1.0, 2.0};
  const std::vector<Sample> batch{{x, 0}, {x, 1}};
  CHECK(loss_and_grads(net, batch).loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(loss_and_grads(net, std::vector<Sample>{}), Error);
}

TEST_CASE("gradients match central finite differences") {
  struct Shape {
    std::size_t in;
    std::vector<std::size_t> hidden;
    std::size_t d, k;
  };
  // 2-16-2 from the examples plus a deeper net; both well under 1e3 parameters.
  for (const Shape& s : {Shape{2, {16}, 16, 2}, Shape{4, {12, 10}, 8, 5}}) {
    std::mt19937_64 rng(31);
    const Network net = init_network(s.in, s.hidden, s.d, s.k, 77);
    CHECK(net.parameter_count() <= 1000);
    std::vector<Vector> xs;
    std::vector<Sample> batch;
    for (int i = 0; i < 6; ++i) xs.push_back(random_vector(s.in, rng));
    for (std::size_t i = 0; i < xs.size(); ++i) batch.push_back({xs[i], i % s.k});

    const LossAndGrads lg = loss_and_grads(net, batch);
    CHECK(lg.loss == doctest::Approx(batch_loss(net, batch)).epsilon(1e-14));
    const auto grads = lg.grads.parameter_blocks();
    double worst = 0.0;
    Network probe = net;
    auto blocks = probe.parameter_blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t i = 0; i < blocks[b].size(); ++i) {
        const double orig = blocks[b][i];
        const double h = 1e-6;
        blocks[b][i] = orig + h;
        const double lp = batch_loss(probe, batch);
        blocks[b][i] = orig - h;
        const double lm = batch_loss(probe, batch);
        blocks[b][i] = orig;
        const double fd = (lp - lm) / (2 * h);
        const double err = std::abs(fd - grads[b][i]) / std::max(1e-3, std::abs(fd));
        worst = std::max(worst, err);
      }
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("duplicating the batch leaves loss and gradients unchanged") {
  std::mt19937_64 rng(4);
  const Network net = init_network(3, {6}, 4, 3, 2);
  std::vector<Vector> xs;
  for (int i = 0; i < 5; ++i) xs.push_back(random_vector(3, rng));
  std::vector<Sample> once, twice;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    once.push_back({xs[i], i % 3});
    twice.push_back({xs[i], i % 3});
    twice.push_back({xs[i], i % 3});
  }
  const LossAndGrads a = loss_and_grads(net, once);
  const LossAndGrads b = loss_and_grads(net, twice);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
  const auto ga = a.grads.parameter_blocks();
  const auto gb = b.grads.parameter_blocks();
  for (std::size_t k = 0; k < ga.size(); ++k)
    for (std::size_t i = 0; i < ga[k].size(); ++i) CHECK(ga[k][i] == doctest::Approx(gb[k][i]).epsilon(1e-12));
}

TEST_CASE("weighted loss scales per-example terms") {
  std::mt19937_64 rng(10);
  const Network net = init_network(2, {}, 2, 2, 3);
  const Vector x0 = random_vector(2, rng), x1 = random_vector(2, rng);
  const std::vector<Sample> batch{{x0, 0}, {x1, 1}};
  const std::vector<double> w{2.0, 0.0};
  const double expect = (2.0 * -log_softmax(logits(net, x0))[0]) / 2.0;
  CHECK(loss_and_grads(net, batch, w).loss == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("optimizer: zero gradients, decoupled decay and a hand-computed step") {
  Network net = init_network(3, {4}, 2, 2, 6);
  const Network before = net;
  OptimizerState opt = make_optimizer(net, AdamWConfig{1e-3, 0.0, 0.9, 0.999, 1e-8});
  optimizer_step(net, opt, net.zeros_like());
  CHECK(net == before);
  CHECK(opt.step == 1);

  OptimizerState decay = make_optimizer(net, AdamWConfig{0.1, 0.5, 0.9, 0.999, 1e-8});
  optimizer_step(net, decay, net.zeros_like());
  const auto pa = net.parameter_blocks();
  const auto pb = before.parameter_blocks();
  for (std::size_t b = 0; b < pa.size(); ++b)
    for (std::size_t i = 0; i < pa[b].size(); ++i) CHECK(pa[b][i] == doctest::Approx(pb[b][i] * (1 - 0.05)).epsilon(1e-15));

  Network scalar = init_network(1, {}, 1, 1, 0);
  scalar.head()(0, 0) = 1.0;
  OptimizerState sopt = make_optimizer(scalar, AdamWConfig{1e-3, 0.0, 0.9, 0.999, 1e-8});
  Network g = scalar.zeros_like();
  g.head()(0, 0) = 1.0;
  optimizer_step(scalar, sopt, g);
  // m = 0.1, v = 0.001; bias-corrected m_hat = 1, v_hat = 1.
  const double m_hat = (0.1 * 1.0) / (1 - 0.9);
  const double v_hat = (0.001 * 1.0) / (1 - 0.999);
  CHECK(scalar.head()(0, 0) == doctest::Approx(1.0 - 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-15));

  // Second step, gradient -2: unrolled moment recursion.
  g.head()(0, 0) = -2.0;
  const double w1 = scalar.head()(0, 0);
  optimizer_step(scalar, sopt, g);
  const double m2 = 0.9 * 0.1 + 0.1 * -2.0, v2 = 0.999 * 0.001 + 0.001 * 4.0;
  const double expect = w1 - 1e-3 * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(scalar.head()(0, 0) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(sopt.step == 2);

  Network wrong = init_network(2, {}, 2, 2, 0);
  const Network kept = scalar;
  try {
    optimizer_step(scalar, sopt, wrong);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  CHECK(scalar == kept);
}

TEST_CASE("per-sample gradient norm equals the exact head gradient norm") {
  std::mt19937_64 rng(14);
  const Network net = init_network(3, {5}, 2, 2, 4);
  for (int t = 0; t < 10; ++t) {
    const Vector x = random_vector(3, rng);
    const std::size_t y = t % 2;
    const Sample s{x, y};
    const LossAndGrads lg = loss_and_grads(net, std::span<const Sample>(&s, 1));
    double sq = 0;
    for (double v : lg.grads.head().data()) sq += v * v;
    CHECK(per_sample_grad_norm_bound(net, x, y) == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
  }

  Network hand = init_network(2, {}, 2, 2, 0);
  hand.head() = Matrix::from_rows({{1.0, -1.0}, {0.5, 2.0}});
  const Vector x{1.0, 2.0};  // h = x, f = (2, 3)
  const double p0 = 1.0 / (1.0 + std::exp(1.0));
  const double r = std::sqrt(2.0) * (1.0 - p0);  // ||p - e_0||
  CHECK(per_sample_grad_norm_bound(hand, x, 0) == doctest::Approx(r * std::sqrt(5.0)).epsilon(1e-14));

  CHECK(per_sample_grad_norm_bound(hand, Vector{0.0, 0.0}, 1) == 0.0);
  Network confident = hand;
  confident.head() = Matrix::from_rows({{100.0, -100.0}, {0.0, 0.0}});
  CHECK(per_sample_grad_norm_bound(confident, Vector{1.0, 0.0}, 0) < 1e-80);
}
