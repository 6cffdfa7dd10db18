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

#include "bsel/posterior.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bsel/error.hpp"

namespace bsel {

LaplaceState init_laplace(double prior_precision, double effective_data, std::size_t d,
                          std::size_t k, double ema_decay) {
  if (!(prior_precision > 0.0) || !std::isfinite(prior_precision)) {
    throw Error(ErrorCode::InvalidHyperparameter, "prior precision must be > 0");
  }
  if (!(effective_data > 0.0) || !std::isfinite(effective_data)) {
    throw Error(ErrorCode::InvalidHyperparameter, "effective data count must be > 0");
  }
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) {
    // 1.0 is allowed only through direct state construction (frozen EMA).
    throw Error(ErrorCode::InvalidHyperparameter, "EMA decay must be in [0, 1)");
  }
  if (d == 0 || k == 0) throw Error(ErrorCode::InvalidDimensions, "empty curvature factors");
  LaplaceState s;
  s.feature_moment = Matrix(d, d);
  s.gradient_moment = Matrix(k, k);
  s.prior_precision = prior_precision;
  s.effective_data = effective_data;
  s.ema_decay = ema_decay;
  return s;
}

void update_curvature(LaplaceState& state, std::span<const Vector> batch_features,
                      std::span<const Vector> batch_grads) {
  if (batch_features.empty() || batch_grads.empty()) {
    throw Error(ErrorCode::EmptyBatch, "curvature update with empty batch");
  }
  if (batch_features.size() != batch_grads.size()) {
    throw Error(ErrorCode::ShapeMismatch, "features and gradients differ in count");
  }
  const std::size_t d = state.feature_dim();
  const std::size_t k = state.num_classes();
  Matrix a(d, d);
  Matrix g(k, k);
  for (std::size_t i = 0; i < batch_features.size(); ++i) {
    if (batch_features[i].size() != d || batch_grads[i].size() != k) {
      throw Error(ErrorCode::ShapeMismatch, "curvature sample " + std::to_string(i));
    }
    add_outer(a, batch_features[i]);
    add_outer(g, batch_grads[i]);
  }
  const double w = (1.0 - state.ema_decay) / static_cast<double>(batch_features.size());
  const double beta = state.ema_decay;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    state.feature_moment.data()[i] = beta * state.feature_moment.data()[i] + w * a.data()[i];
  }
  for (std::size_t i = 0; i < g.data().size(); ++i) {
    state.gradient_moment.data()[i] =
        beta * state.gradient_moment.data()[i] + w * g.data()[i];
  }
  symmetrize(state.feature_moment);
  symmetrize(state.gradient_moment);
  ++state.updates;
}

KroneckerFactors factors(const LaplaceState& state) {
  const double sn = std::sqrt(state.effective_data);
  const double st = std::sqrt(state.prior_precision);
  KroneckerFactors out{sn * state.feature_moment, sn * state.gradient_moment};
  for (std::size_t i = 0; i < out.input_factor.rows(); ++i) out.input_factor(i, i) += st;
  for (std::size_t i = 0; i < out.output_factor.rows(); ++i) out.output_factor(i, i) += st;
  return out;
}

PosteriorSnapshot::PosteriorSnapshot(const LaplaceState& state)
    : factors_(bsel::factors(state)),
      chol_v_(cholesky(factors_.input_factor)),
      chol_u_(cholesky(factors_.output_factor)),
      u_inv_(chol_u_.inverse()) {}

PredictiveGaussian predictive(const PosteriorSnapshot& snapshot, std::span<const double> h,
                              std::span<const double> f) {
  if (h.size() != snapshot.input_cholesky().n() || f.size() != snapshot.output_cholesky().n()) {
    throw Error(ErrorCode::ShapeMismatch, "predictive: feature or logit width");
  }
  // h^T V^{-1} h = ||L_V^{-1} h||^2
  const Vector w = snapshot.input_cholesky().forward_solve(h);
  PredictiveGaussian p;
  p.mean.assign(f.begin(), f.end());
  p.scale = dot(w, w);
  p.shape = snapshot.output_inverse();
  p.shape_precision_factor = snapshot.output_cholesky();
  return p;
}

PredictiveGaussian predictive(const LaplaceState& state, std::span<const double> h,
                              std::span<const double> f) {
  return predictive(PosteriorSnapshot(state), h, f);
}

Matrix sample_logits(const PredictiveGaussian& pred, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw Error(ErrorCode::InvalidHyperparameter, "need at least one sample");
  const std::size_t k = pred.mean.size();
  Matrix out(samples, k);
  for (std::size_t s = 0; s < samples; ++s) std::copy(pred.mean.begin(), pred.mean.end(), out.row(s).begin());
  if (pred.scale == 0.0) return out;

  const double sd = std::sqrt(pred.scale);
  const LowerTriangular& l = pred.shape_precision_factor;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(k);
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& v : z) v = normal(rng);
    // L^T x = z gives Cov(x) = (L L^T)^{-1} = U^{-1}.
    const Vector x = l.back_solve(z);
    auto row = out.row(s);
    for (std::size_t c = 0; c < k; ++c) row[c] += sd * x[c];
  }
  return out;
}

}  // namespace bsel
