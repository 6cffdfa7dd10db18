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

#include "bsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bsel/error.hpp"

namespace bsel {

const char* to_string(Method method) {
  switch (method) {
    case Method::Bayesian: return "bayesian";
    case Method::Uniform: return "uniform";
    case Method::TrainLoss: return "train_loss";
    case Method::GradNorm: return "grad_norm";
    case Method::GradNormIS: return "grad_norm_is";
    case Method::Irreducible: return "irreducible";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Bayesian, Method::Uniform, Method::TrainLoss, Method::GradNorm,
                   Method::GradNormIS, Method::Irreducible}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::ConfigError, "selection.method: unknown method '" + name + "'");
}

McLikelihood mc_likelihood(std::size_t y, const Matrix& mc_logits) {
  const std::size_t samples = mc_logits.rows();
  if (samples == 0) throw Error(ErrorCode::InvalidHyperparameter, "no Monte Carlo samples");
  if (y >= mc_logits.cols()) throw Error(ErrorCode::IndexOutOfRange, "label out of range");
  Vector log_lik(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto f = mc_logits.row(s);
    log_lik[s] = f[y] - log_sum_exp(f);
  }
  McLikelihood out;
  out.mean_log_lik =
      std::accumulate(log_lik.begin(), log_lik.end(), 0.0) / static_cast<double>(samples);
  out.log_mean_lik = log_sum_exp(log_lik) - std::log(static_cast<double>(samples));
  return out;
}

double score_bayesian(const McLikelihood& mc, double ref_lp, double alpha) {
  return alpha * mc.mean_log_lik + (1.0 - alpha) * ref_lp - mc.log_mean_lik;
}

double score_bayesian(std::size_t y, const Matrix& mc_logits, double ref_lp, double alpha) {
  return score_bayesian(mc_likelihood(y, mc_logits), ref_lp, alpha);
}

double score_train_loss(std::size_t y, std::span<const double> logits) {
  if (y >= logits.size()) throw Error(ErrorCode::IndexOutOfRange, "label out of range");
  return log_sum_exp(logits) - logits[y];
}

double score_grad_norm(std::size_t y, std::span<const double> logits, std::span<const double> h) {
  return norm2(softmax_ce_grad(logits, y)) * norm2(h);
}

double score_irreducible(std::size_t y, std::span<const double> logits, double holdout_lp) {
  return score_train_loss(y, logits) + holdout_lp;
}

ImportanceSample sample_grad_norm_is(std::span<const double> scores, std::size_t n_b,
                                     std::uint64_t seed) {
  const std::size_t n = scores.size();
  if (n_b > n || n_b == 0) {
    throw Error(ErrorCode::BatchTooSmall, "cannot sample " + std::to_string(n_b) + " of " +
                                              std::to_string(n) + " candidates");
  }
  double total = 0.0;
  for (double s : scores) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::InvalidHyperparameter, "importance scores must be finite and >= 0");
    }
    total += s;
  }

  std::mt19937_64 rng(seed);
  ImportanceSample out;
  if (total <= 0.0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_b));
    out.weights.assign(n_b, 1.0);
    out.fell_back_to_uniform = true;
    return out;
  }

  std::vector<double> remaining(scores.begin(), scores.end());
  double remaining_mass = total;
  std::vector<std::uint8_t> taken(n, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t draw = 0; draw < n_b; ++draw) {
    std::size_t pick = n;
    if (remaining_mass > 0.0) {
      const double u = unit(rng) * remaining_mass;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || remaining[i] <= 0.0) continue;
        acc += remaining[i];
        pick = i;
        if (u < acc) break;
      }
    }
    if (pick == n) {
      // Positive mass exhausted; take the remaining zero-score candidates uniformly.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) rest.push_back(i);
      std::uniform_int_distribution<std::size_t> any(0, rest.size() - 1);
      pick = rest[any(rng)];
    }
    taken[pick] = 1;
    remaining_mass -= remaining[pick];
    remaining[pick] = 0.0;
    out.indices.push_back(pick);
    const double p = scores[pick] / total;
    out.weights.push_back(p > 0.0 ? 1.0 / (static_cast<double>(n) * p) : 1.0);
  }
  return out;
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t n_b) {
  if (n_b > scores.size()) {
    throw Error(ErrorCode::BatchTooSmall, "top_k of " + std::to_string(n_b) + " from " +
                                              std::to_string(scores.size()) + " scores");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&scores](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_b), idx.end(), better);
  idx.resize(n_b);
  return idx;
}

}  // namespace bsel
