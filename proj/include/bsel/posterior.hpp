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

// Online last-layer Laplace posterior with Kronecker-factored curvature.
//
// The head weights W (d x k) get the matrix-normal posterior
// MN(W_{t-1}, U^{-1}, V^{-1}) with
//   V = sqrt(n_e) A + sqrt(tau0) I,   U = sqrt(n_e) G + sqrt(tau0) I,
// where A is the running mean of h h^T over trained-on features and G the
// running mean of g g^T over output log-likelihood gradients. n_e stands in
// for the number of examples seen so the posterior does not collapse as
// training goes on. For an input with features h and logits f the pushforward
// is N(f, (h^T V^{-1} h) U^{-1}).

#ifndef BSEL_POSTERIOR_HPP_
#define BSEL_POSTERIOR_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "bsel/numerics.hpp"

namespace bsel {

struct LaplaceState {
  Matrix feature_moment;   // A, d x d
  Matrix gradient_moment;  // G, k x k
  double prior_precision = 1.0;  // tau0
  double effective_data = 500.0;  // n_e
  double ema_decay = 0.99;  // beta
  std::uint64_t updates = 0;

  std::size_t feature_dim() const noexcept { return feature_moment.rows(); }
  std::size_t num_classes() const noexcept { return gradient_moment.rows(); }

  bool operator==(const LaplaceState&) const = default;
};

LaplaceState init_laplace(double prior_precision, double effective_data, std::size_t d,
                          std::size_t k, double ema_decay);

/// A <- beta A + (1 - beta) mean_i h_i h_i^T, likewise G with the gradients.
void update_curvature(LaplaceState& state, std::span<const Vector> batch_features,
                      std::span<const Vector> batch_grads);

struct KroneckerFactors {
  Matrix input_factor;   // V
  Matrix output_factor;  // U
};

KroneckerFactors factors(const LaplaceState& state);

/// Factorized (V, U) for one selection round; shared read-only by all
/// candidates of the round.
class PosteriorSnapshot {
 public:
  explicit PosteriorSnapshot(const LaplaceState& state);

  const KroneckerFactors& factors() const noexcept { return factors_; }
  const LowerTriangular& input_cholesky() const noexcept { return chol_v_; }
  const LowerTriangular& output_cholesky() const noexcept { return chol_u_; }
  const Matrix& output_inverse() const noexcept { return u_inv_; }

 private:
  KroneckerFactors factors_;
  LowerTriangular chol_v_;
  LowerTriangular chol_u_;
  Matrix u_inv_;
};

struct PredictiveGaussian {
  Vector mean;       // f
  double scale = 0;  // sigma^2 = h^T V^{-1} h
  Matrix shape;      // U^{-1}
  LowerTriangular shape_precision_factor;  // chol(U)

  Matrix covariance() const { return scale * shape; }
};

PredictiveGaussian predictive(const PosteriorSnapshot& snapshot, std::span<const double> h,
                              std::span<const double> f);
PredictiveGaussian predictive(const LaplaceState& state, std::span<const double> h,
                              std::span<const double> f);

/// S x k matrix of draws mean + sqrt(sigma^2) L_U^{-T} z, z ~ N(0, I).
Matrix sample_logits(const PredictiveGaussian& pred, std::size_t samples, std::uint64_t seed);

}  // namespace bsel

#endif  // BSEL_POSTERIOR_HPP_
