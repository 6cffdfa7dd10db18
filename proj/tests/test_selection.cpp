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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bsel/error.hpp"
#include "bsel/model.hpp"
#include "bsel/selection.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bsel;
using bsel::testing::random_matrix;
using bsel::testing::random_vector;

namespace {

Matrix repeat_rows(const Vector& f, std::size_t s) {
  Matrix m(s, f.size());
  for (std::size_t r = 0; r < s; ++r) std::copy(f.begin(), f.end(), m.row(r).begin());
  return m;
}

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::Bayesian, Method::Uniform, Method::TrainLoss, Method::GradNorm,
                   Method::GradNormIS, Method::Irreducible}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("random"), Error);
}

TEST_CASE("bayesian score with a degenerate posterior") {
  const Vector f{0.3, -1.0, 2.0};
  const Matrix mc = repeat_rows(f, 5);
  const double lp = log_softmax(f)[1];
  for (double alpha : {0.0, 0.2, 0.7}) {
    CHECK(score_bayesian(1, mc, -0.4, alpha) ==
          doctest::Approx((1 - alpha) * -0.4 + (alpha - 1) * lp).epsilon(1e-14));
  }
  CHECK(std::abs(score_bayesian(1, mc, -0.4, 1.0)) < 1e-15);
}

TEST_CASE("bayesian score with alpha = 0 isolates the reference term") {
  std::mt19937_64 rng(2);
  const Matrix mc = random_matrix(7, 4, rng, 2.0);
  Vector log_lik(7);
  for (std::size_t s = 0; s < 7; ++s) log_lik[s] = log_softmax(mc.row(s))[2];
  const double log_mean = log_sum_exp(log_lik) - std::log(7.0);
  CHECK(score_bayesian(2, mc, -0.8, 0.0) == doctest::Approx(-0.8 - log_mean).epsilon(1e-14));
}

TEST_CASE("bayesian score hand case against long double arithmetic") {
  // k=2, S=2, logits (0,0) and (2,0), y=0, alpha=0.5, ref_lp=-0.1
  const Matrix mc = Matrix::from_rows({{0.0, 0.0}, {2.0, 0.0}});
  using ld = long double;
  const ld p1 = 0.5L;
  const ld p2 = std::exp(2.0L) / (std::exp(2.0L) + 1.0L);
  const ld mean_log = (std::log(p1) + std::log(p2)) / 2.0L;
  const ld log_mean = std::log((p1 + p2) / 2.0L);
  const ld oracle = 0.5L * mean_log + 0.5L * -0.1L - log_mean;
  const double got = score_bayesian(0, mc, -0.1, 0.5);
  CHECK(std::abs(static_cast<ld>(got) - oracle) < 1e-14L);
}

TEST_CASE("bayesian score Jensen property, sign at alpha 1, slope in ref_lp") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const Matrix mc = random_matrix(1 + t % 30, 5, rng, 4.0);
    const std::size_t y = t % 5;
    const McLikelihood m = mc_likelihood(y, mc);
    CHECK(m.mean_log_lik <= m.log_mean_lik + 1e-12);
    CHECK(score_bayesian(y, mc, -0.3, 1.0) <= 1e-12);
    const double alpha = 0.25;
    const double a = score_bayesian(m, -1.0, alpha);
    const double b = score_bayesian(m, 1.5, alpha);
    CHECK((b - a) / 2.5 == doctest::Approx(1 - alpha).epsilon(1e-12));
  }
}

TEST_CASE("bayesian score stays finite for extreme logits") {
  const Matrix mc = Matrix::from_rows({{-800.0, 800.0}, {-900.0, 900.0}});
  const double s = score_bayesian(0, mc, -0.1, 0.2);
  CHECK(std::isfinite(s));
}

TEST_CASE("train loss score") {
  CHECK(score_train_loss(1, Vector{0, 0, 0, 0}) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(score_train_loss(0, Vector{50, 0}) < 1e-20);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Vector f = random_vector(6, rng, 3.0);
    CHECK(score_train_loss(t % 6, f) == doctest::Approx(-log_softmax(f)[t % 6]).epsilon(1e-14));
  }
}

TEST_CASE("gradient norm score matches the model statistic") {
  const Network net = init_network(3, {4}, 2, 3, 9);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const Vector x = random_vector(3, rng);
    const Vector h = features(net, x);
    CHECK(score_grad_norm(t % 3, logits(net, x), h) ==
          doctest::Approx(per_sample_grad_norm_bound(net, x, t % 3)).epsilon(1e-14));
  }
  CHECK(score_grad_norm(0, Vector{100, -100}, Vector{1, 1}) < 1e-80);
  CHECK(score_grad_norm(0, Vector{0, 0}, Vector{0, 0}) == 0.0);
}

TEST_CASE("irreducible loss score") {
  const Vector f{1.0, -0.5};
  CHECK(score_irreducible(1, f, log_softmax(f)[1]) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(score_irreducible(0, Vector{0, 0, 0}, 0.0) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  // k=2, logits (2,0), y=1: train loss 2 + log(1+e^-2); holdout lp -0.25.
  const double expect = 2.0 + std::log1p(std::exp(-2.0)) - 0.25;
  CHECK(score_irreducible(1, Vector{2, 0}, -0.25) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("top_k hand cases and errors") {
  CHECK(top_k(Vector{3, 1, 2}, 2) == std::vector<std::size_t>{0, 2});
  CHECK(top_k(Vector{5, 5, 5}, 2) == std::vector<std::size_t>{0, 1});
  CHECK(top_k(Vector{1, 2, 2, 0}, 3) == std::vector<std::size_t>{1, 2, 0});
  try {
    top_k(Vector{1, 2}, 3);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BatchTooSmall);
  }
}

TEST_CASE("top_k agrees with a full sort, is shift invariant and permutation equivariant") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> coarse(0, 40);  // forces ties
  for (int t = 0; t < 50; ++t) {
    Vector s(320);
    for (double& v : s) v = t % 2 ? coarse(rng) : std::normal_distribution<double>(0, 1)(rng);
    std::vector<std::size_t> full(320);
    std::iota(full.begin(), full.end(), 0);
    std::stable_sort(full.begin(), full.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    full.resize(32);
    const auto got = top_k(s, 32);
    CHECK(got == full);

    Vector shifted = s;
    for (double& v : shifted) v += 17.0;
    CHECK(top_k(shifted, 32) == got);

    if (t % 2 == 0) {  // distinct scores: plain equivariance
      std::vector<std::size_t> perm(320);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Vector permuted(320);
      for (std::size_t i = 0; i < 320; ++i) permuted[i] = s[perm[i]];
      const auto pg = top_k(permuted, 32);
      for (std::size_t j = 0; j < 32; ++j) CHECK(perm[pg[j]] == got[j]);
    }
  }
}

TEST_CASE("importance sampling: determinism, single positive score, weights") {
  const Vector s{0.0, 0.0, 3.0, 0.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(sample_grad_norm_is(s, 2, seed).indices.front() == 2);

  const Vector scores{1.0, 2.0, 3.0, 4.0};
  const ImportanceSample a = sample_grad_norm_is(scores, 3, 5);
  const ImportanceSample b = sample_grad_norm_is(scores, 3, 5);
  CHECK(a.indices == b.indices);
  CHECK(a.weights == b.weights);
  CHECK_FALSE(a.fell_back_to_uniform);
  for (std::size_t j = 0; j < a.indices.size(); ++j) {
    const double p = scores[a.indices[j]] / 10.0;
    CHECK(a.weights[j] == doctest::Approx(1.0 / (4.0 * p)).epsilon(1e-15));
  }
  std::vector<std::size_t> sorted = a.indices;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());

  const ImportanceSample z = sample_grad_norm_is(Vector(6, 0.0), 3, 1);
  CHECK(z.fell_back_to_uniform);
  CHECK(z.indices.size() == 3);
  CHECK_THROWS_AS(sample_grad_norm_is(Vector{1.0, -1.0}, 1, 0), Error);
  CHECK_THROWS_AS(sample_grad_norm_is(Vector{1.0}, 2, 0), Error);
}

TEST_CASE("importance sampling with equal scores is uniform (chi-square)") {
  const std::size_t n = 10, trials = 10000;
  std::vector<double> counts(n, 0.0);
  for (std::size_t t = 0; t < trials; ++t) counts[sample_grad_norm_is(Vector(n, 1.0), 1, t).indices[0]] += 1;
  double chi2 = 0;
  const double e = static_cast<double>(trials) / n;
  for (double c : counts) chi2 += (c - e) * (c - e) / e;
  CHECK(chi2 < 27.88);  // 9 dof, p = 0.001

  // Proportional first draw.
  const Vector s{1.0, 3.0};
  double ones = 0;
  for (std::size_t t = 0; t < trials; ++t) ones += sample_grad_norm_is(s, 1, 50000 + t).indices[0] == 1;
  CHECK(ones / trials == doctest::Approx(0.75).epsilon(0.03));
}
