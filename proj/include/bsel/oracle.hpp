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

// Brute-force references for the selection objective and the curvature
// approximation. Posteriors over a <= 3 parameter binary logistic model are
// integrated on a tensor-product trapezoid grid spanning +-6 prior standard
// deviations; every "exact" value is confirmed by halving the grid spacing.

#ifndef BSEL_ORACLE_HPP_
#define BSEL_ORACLE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bsel/numerics.hpp"

namespace bsel::oracle {

/// p(y = 1 | x, theta) = sigmoid(theta^T x), y in {0, 1}.
struct LogisticExample {
  Vector x;
  int y = 0;
};

using LogisticData = std::vector<LogisticExample>;

struct GridSpec {
  /// Points per axis; 0 picks 401 for one or two parameters and 61 for three.
  std::size_t points = 0;
  double half_width_sd = 6.0;
  /// Max allowed change of a quantity when the spacing is halved.
  double refinement_tol = 1e-6;
};

/// log p(y | x, D*, D) under the prior N(0, I / prior_precision).
/// Throws GridTooCoarse when grid refinement moves the value by more than the tolerance.
double grid_posterior_predictive(double prior_precision, const LogisticData& train,
                                 const LogisticData& extra, const LogisticExample& query,
                                 const GridSpec& grid = {});

struct BoundCase {
  double prior_precision = 1.0;
  LogisticData train;  // D_{t-1}
  LogisticData extra;  // D*
  LogisticExample query;
};

struct BoundReport {
  double exact = 0.0;          // log p(y|x, D*, D)
  double train_bound = 0.0;    // Jensen bound under p(theta|D)
  double extra_bound = 0.0;    // Jensen bound under p(theta|D*)
  std::vector<double> alphas;  // mixture weights checked
  std::vector<double> mixture_bounds;
  double refinement_change = 0.0;
  double max_violation = 0.0;  // max over bounds of (bound - exact), <= tol when valid
};

/// Evaluates both Jensen lower bounds and their alpha-mixtures for
/// alpha in {0, .25, .5, .75, 1} against the grid-exact predictive. Throws
/// BoundViolation if any bound exceeds the exact value by more than `tol`.
BoundReport check_lower_bounds(const BoundCase& c, double tol = 1e-6, const GridSpec& grid = {});

/// Random small case: 1-3 parameters, up to 6 examples in each set.
BoundCase random_bound_case(std::uint64_t seed);

/// One last-layer sample: features h and logits f at which curvature is taken,
/// plus the observed label.
struct HeadSample {
  Vector h;
  Vector f;
  std::size_t y = 0;
};

/// Softmax cross-entropy Hessian in the logits, diag(p) - p p^T.
Matrix softmax_hessian(std::span<const double> f);

/// tau0 I + sum_n J_n^T Lambda_n J_n over the d*k head weights, indexed
/// (i, c) -> i * k + c. Throws DimensionLimit when d*k > 256.
Matrix full_ggn_last_layer(const std::vector<HeadSample>& history, double prior_precision,
                           std::size_t d, std::size_t k);

struct KfacFidelity {
  double relative_frobenius_gap = 0.0;  // ||V (x) U - GGN||_F / ||GGN||_F
  std::vector<double> predictive_gaps;  // per probe, relative Frobenius gap of logit covariances
  std::vector<double> kfac_variance_trace;
  std::vector<double> full_variance_trace;
};

/// Compares the Kronecker factors built from the history (means, n_e in place
/// of the count) against the exact GGN, and the implied logit covariances on
/// the probe features.
KfacFidelity kfac_fidelity(const std::vector<HeadSample>& history, double prior_precision,
                           double effective_data, std::size_t d, std::size_t k,
                           const std::vector<Vector>& probes);

struct SuiteReport {
  std::vector<std::string> lines;
  std::size_t failures = 0;
  bool passed() const noexcept { return failures == 0; }
  std::string text() const;
};

/// Lower-bound sweep over `cases` random cases plus the sharp-posterior and
/// endpoint checks.
SuiteReport run_bounds_suite(std::size_t cases = 100, std::uint64_t seed = 20240501);

/// GGN structure checks, the KFAC zero-data identity, and a fidelity readout.
SuiteReport run_ggn_suite(std::uint64_t seed = 20240502);

}  // namespace bsel::oracle

#endif  // BSEL_ORACLE_HPP_
