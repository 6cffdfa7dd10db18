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

#ifndef BSEL_SELECTION_HPP_
#define BSEL_SELECTION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsel/numerics.hpp"

namespace bsel {

enum class Method { Bayesian, Uniform, TrainLoss, GradNorm, GradNormIS, Irreducible };

const char* to_string(Method method);
/// Accepts the names produced by to_string; throws ConfigError otherwise.
Method parse_method(const std::string& name);

struct SelectorConfig {
  Method method = Method::Bayesian;
  double alpha = 0.2;
  std::size_t mc_samples = 100;
  std::uint64_t seed = 0;
};

struct ScoreVector {
  Method method = Method::Uniform;
  std::vector<double> scores;
  /// Only for GradNormIS: importance weights of the sampled candidates.
  std::vector<double> weights;
};

/// The two Monte Carlo aggregates of a candidate's label likelihood under the
/// sampled logits: (1/S) sum log p(y|f_s) and log (1/S) sum p(y|f_s).
struct McLikelihood {
  double mean_log_lik = 0.0;
  double log_mean_lik = 0.0;
};

McLikelihood mc_likelihood(std::size_t y, const Matrix& mc_logits);

/// alpha * mean_log_lik + (1 - alpha) * ref_lp - log_mean_lik, all in log space.
double score_bayesian(std::size_t y, const Matrix& mc_logits, double ref_lp, double alpha);
double score_bayesian(const McLikelihood& mc, double ref_lp, double alpha);

/// -log p(y|f)
double score_train_loss(std::size_t y, std::span<const double> logits);

/// ||softmax(f) - onehot(y)|| * ||h||
double score_grad_norm(std::size_t y, std::span<const double> logits, std::span<const double> h);

/// -log p(y|f) + holdout_lp
double score_irreducible(std::size_t y, std::span<const double> logits, double holdout_lp);

struct ImportanceSample {
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // 1 / (n_B p_i)
  bool fell_back_to_uniform = false;
};

/// Draws n_b candidates without replacement with probability proportional to
/// score. All-zero scores fall back to a uniform draw with unit weights.
ImportanceSample sample_grad_norm_is(std::span<const double> scores, std::size_t n_b,
                                     std::uint64_t seed);

/// Indices of the n_b largest scores, by descending score then ascending index.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t n_b);

}  // namespace bsel

#endif  // BSEL_SELECTION_HPP_
