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

#include "bsel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "bsel/error.hpp"
#include "bsel/posterior.hpp"

namespace bsel::oracle {

namespace {

double log_sigmoid(double z) { return z < 0.0 ? z - std::log1p(std::exp(z)) : -std::log1p(std::exp(-z)); }

double log_lik(const LogisticExample& e, std::span<const double> theta) {
  const double z = dot(theta, e.x);
  return e.y == 1 ? log_sigmoid(z) : log_sigmoid(-z);
}

double log_lik(const LogisticData& data, std::span<const double> theta) {
  double s = 0.0;
  for (const LogisticExample& e : data) s += log_lik(e, theta);
  return s;
}

// Streaming log-sum-exp that also carries two weighted sums sum_i e^{a_i} f_i.
class WeightedLse {
 public:
  void add(double a, double f1 = 0.0, double f2 = 0.0) {
    if (a == -INFINITY) return;
    if (a > max_) {
      const double r = std::exp(max_ - a);
      s_ *= r;
      f1_ *= r;
      f2_ *= r;
      max_ = a;
    }
    const double w = std::exp(a - max_);
    s_ += w;
    f1_ += w * f1;
    f2_ += w * f2;
  }
  double log_sum() const { return max_ + std::log(s_); }
  double mean1() const { return f1_ / s_; }
  double mean2() const { return f2_ / s_; }

 private:
  double max_ = -INFINITY;
  double s_ = 0.0, f1_ = 0.0, f2_ = 0.0;
};

struct GridQuantities {
  double exact = 0.0;
  double train_bound = 0.0;
  double extra_bound = 0.0;
};

std::size_t dimension_of(const BoundCase& c) { return c.query.x.size(); }

void check_dimensions(std::size_t p, const LogisticData& a, const LogisticData& b) {
  if (p == 0 || p > 3) throw Error(ErrorCode::DimensionLimit, "grid oracle supports 1-3 parameters");
  for (const auto* set : {&a, &b})
    for (const LogisticExample& e : *set)
      if (e.x.size() != p) throw Error(ErrorCode::DimensionMismatch, "example width differs from query");
}

GridQuantities integrate(const BoundCase& c, std::size_t points, double half_width_sd) {
  const std::size_t p = dimension_of(c);
  const double half = half_width_sd / std::sqrt(c.prior_precision);
  const double h = 2.0 * half / static_cast<double>(points - 1);
  std::vector<double> axis(points);
  std::vector<double> log_w(points);
  for (std::size_t i = 0; i < points; ++i) {
    axis[i] = -half + h * static_cast<double>(i);
    log_w[i] = (i == 0 || i + 1 == points) ? std::log(0.5) : 0.0;
  }

  WeightedLse train_post;   // prior * L(D):  means of ll_q, ll_extra
  WeightedLse extra_post;   // prior * L(D*): means of ll_q, ll_train
  WeightedLse joint;        // prior * L(D) * L(D*)
  WeightedLse joint_query;  // ... * p(y|x)

  std::vector<std::size_t> idx(p, 0);
  Vector theta(p);
  const std::size_t total = static_cast<std::size_t>(std::pow(points, p) + 0.5);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double lw = 0.0, sq = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      idx[a] = rem % points;
      rem /= points;
      theta[a] = axis[idx[a]];
      lw += log_w[idx[a]];
      sq += theta[a] * theta[a];
    }
    const double base = lw - 0.5 * c.prior_precision * sq;
    const double ll_train = log_lik(c.train, theta);
    const double ll_extra = log_lik(c.extra, theta);
    const double ll_query = log_lik(c.query, theta);
    train_post.add(base + ll_train, ll_query, ll_extra);
    extra_post.add(base + ll_extra, ll_query, ll_train);
    joint.add(base + ll_train + ll_extra);
    joint_query.add(base + ll_train + ll_extra + ll_query);
  }

  GridQuantities q;
  q.exact = joint_query.log_sum() - joint.log_sum();
  // E_D[log p(y|x,t)] + E_D[log p(D*|t)] - log p(D*|D)
  q.train_bound = train_post.mean1() + train_post.mean2() - (joint.log_sum() - train_post.log_sum());
  q.extra_bound = extra_post.mean1() + extra_post.mean2() - (joint.log_sum() - extra_post.log_sum());
  return q;
}

std::size_t default_points(std::size_t p, const GridSpec& g) {
  if (g.points > 0) return g.points;
  return p <= 2 ? 401 : 61;
}

struct Refined {
  GridQuantities fine;
  double change = 0.0;
};

Refined integrate_refined(const BoundCase& c, const GridSpec& grid) {
  const std::size_t n = default_points(dimension_of(c), grid);
  if (n < 3) throw Error(ErrorCode::GridTooCoarse, "need at least 3 points per axis");
  const GridQuantities coarse = integrate(c, n, grid.half_width_sd);
  const GridQuantities fine = integrate(c, 2 * n - 1, grid.half_width_sd);
  const double change = std::max({std::abs(fine.exact - coarse.exact),
                                  std::abs(fine.train_bound - coarse.train_bound),
                                  std::abs(fine.extra_bound - coarse.extra_bound)});
  if (!(change <= grid.refinement_tol)) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "halving the spacing moved the result by %.3g (tol %.1g)", change,
                  grid.refinement_tol);
    throw Error(ErrorCode::GridTooCoarse, buf);
  }
  return {fine, change};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

}  // namespace

double grid_posterior_predictive(double prior_precision, const LogisticData& train,
                                 const LogisticData& extra, const LogisticExample& query,
                                 const GridSpec& grid) {
  if (!(prior_precision > 0.0)) throw Error(ErrorCode::InvalidHyperparameter, "prior precision must be > 0");
  BoundCase c{prior_precision, train, extra, query};
  check_dimensions(dimension_of(c), train, extra);
  return integrate_refined(c, grid).fine.exact;
}

BoundReport check_lower_bounds(const BoundCase& c, double tol, const GridSpec& grid) {
  check_dimensions(dimension_of(c), c.train, c.extra);
  const Refined r = integrate_refined(c, grid);
  BoundReport rep;
  rep.exact = r.fine.exact;
  rep.train_bound = r.fine.train_bound;
  rep.extra_bound = r.fine.extra_bound;
  rep.refinement_change = r.change;
  rep.alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
  rep.max_violation = std::max(rep.train_bound - rep.exact, rep.extra_bound - rep.exact);
  for (double a : rep.alphas) {
    const double mix = a * rep.train_bound + (1.0 - a) * rep.extra_bound;
    rep.mixture_bounds.push_back(mix);
    rep.max_violation = std::max(rep.max_violation, mix - rep.exact);
  }
  if (rep.max_violation > tol) {
    throw Error(ErrorCode::BoundViolation,
                fmt("exact=%.10g train_bound=%.10g extra_bound=%.10g excess=%.3g", rep.exact,
                    rep.train_bound, rep.extra_bound, rep.max_violation));
  }
  return rep;
}

BoundCase random_bound_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_int_distribution<int> count(0, 6);
  std::uniform_real_distribution<double> prec(0.5, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  BoundCase c;
  const auto p = static_cast<std::size_t>(dim(rng));
  c.prior_precision = prec(rng);
  Vector truth(p);
  for (double& v : truth) v = normal(rng) / std::sqrt(c.prior_precision);
  auto make = [&]() {
    LogisticExample e;
    e.x.resize(p);
    for (double& v : e.x) v = 1.5 * normal(rng);
    const double prob = 1.0 / (1.0 + std::exp(-dot(truth, e.x)));
    e.y = unit(rng) < prob ? 1 : 0;
    return e;
  };
  const int n_train = count(rng);
  const int n_extra = count(rng);
  for (int i = 0; i < n_train; ++i) c.train.push_back(make());
  for (int i = 0; i < n_extra; ++i) c.extra.push_back(make());
  c.query = make();
  return c;
}

Matrix softmax_hessian(std::span<const double> f) {
  const Vector p = softmax(f);
  Matrix lambda(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) lambda(i, j) = (i == j ? p[i] : 0.0) - p[i] * p[j];
  }
  return lambda;
}

Matrix full_ggn_last_layer(const std::vector<HeadSample>& history, double prior_precision,
                           std::size_t d, std::size_t k) {
  if (d * k > 256) {
    throw Error(ErrorCode::DimensionLimit, "full GGN limited to d*k <= 256, got " + std::to_string(d * k));
  }
  Matrix ggn = prior_precision * Matrix::identity(d * k);
  for (const HeadSample& s : history) {
    if (s.h.size() != d || s.f.size() != k) throw Error(ErrorCode::ShapeMismatch, "history sample shape");
    const Matrix lambda = softmax_hessian(s.f);
    // J = h^T (x) I_k, so J^T Lambda J = (h h^T) (x) Lambda.
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double hh = s.h[i] * s.h[j];
        if (hh == 0.0) continue;
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b) ggn(i * k + a, j * k + b) += hh * lambda(a, b);
      }
  }
  symmetrize(ggn);
  return ggn;
}

KfacFidelity kfac_fidelity(const std::vector<HeadSample>& history, double prior_precision,
                           double effective_data, std::size_t d, std::size_t k,
                           const std::vector<Vector>& probes) {
  const Matrix full = full_ggn_last_layer(history, prior_precision, d, k);

  // Means over the history, i.e. an EMA with beta = 0 applied once to the whole set.
  LaplaceState state = init_laplace(prior_precision, effective_data, d, k, 0.0);
  if (!history.empty()) {
    std::vector<Vector> hs, gs;
    for (const HeadSample& s : history) {
      hs.push_back(s.h);
      Vector g = softmax_ce_grad(s.f, s.y);
      for (double& v : g) v = -v;
      gs.push_back(std::move(g));
    }
    update_curvature(state, hs, gs);
  }
  const KroneckerFactors kf = factors(state);
  const Matrix kron_vu = kron(kf.input_factor, kf.output_factor);

  KfacFidelity out;
  out.relative_frobenius_gap = frobenius_norm(kron_vu - full) / frobenius_norm(full);

  const Matrix full_cov = cholesky(full).inverse();
  const PosteriorSnapshot snapshot(state);
  for (const Vector& h : probes) {
    const PredictiveGaussian pred = predictive(snapshot, h, Vector(k, 0.0));
    const Matrix kfac_cov = pred.covariance();
    Matrix exact(k, k);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double hh = h[i] * h[j];
        if (hh == 0.0) continue;
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b) exact(a, b) += hh * full_cov(i * k + a, j * k + b);
      }
    const double denom = frobenius_norm(exact);
    out.predictive_gaps.push_back(denom > 0 ? frobenius_norm(kfac_cov - exact) / denom : 0.0);
    double t1 = 0, t2 = 0;
    for (std::size_t a = 0; a < k; ++a) {
      t1 += kfac_cov(a, a);
      t2 += exact(a, a);
    }
    out.kfac_variance_trace.push_back(t1);
    out.full_variance_trace.push_back(t2);
  }
  return out;
}

std::string SuiteReport::text() const {
  std::ostringstream ss;
  for (const std::string& l : lines) ss << l << '\n';
  ss << (passed() ? "PASS" : "FAIL") << " (" << failures << " failure" << (failures == 1 ? "" : "s")
     << ")\n";
  return ss.str();
}

SuiteReport run_bounds_suite(std::size_t cases, std::uint64_t seed) {
  SuiteReport rep;
  auto record = [&rep](const std::string& name, const std::function<std::string()>& body) {
    try {
      rep.lines.push_back("ok   " + name + " " + body());
    } catch (const Error& e) {
      ++rep.failures;
      rep.lines.push_back("FAIL " + name + " " + e.what());
    }
  };

  double worst = -INFINITY;
  for (std::size_t i = 0; i < cases; ++i) {
    const BoundCase c = random_bound_case(seed + i);
    record("case " + std::to_string(i), [&]() {
      const BoundReport r = check_lower_bounds(c);
      worst = std::max(worst, r.max_violation);
      return fmt("p=%.0f exact=%.8f train_bound=%.8f extra_bound=%.8f", static_cast<double>(c.query.x.size()),
                 r.exact, r.train_bound, r.extra_bound) +
             fmt(" slack=%.3g refine=%.2g", -r.max_violation, r.refinement_change);
    });
  }
  rep.lines.push_back(fmt("worst bound excess over %.0f cases: %.3g", static_cast<double>(cases), worst));

  record("sharp-posterior tightness", [&]() {
    BoundCase c = random_bound_case(seed + 100000);
    c.prior_precision = 1e6;
    const BoundReport r = check_lower_bounds(c);
    const double gap = r.exact - std::min(r.train_bound, r.extra_bound);
    if (gap > 1e-4) throw Error(ErrorCode::BoundViolation, fmt("bound not tight: gap %.3g", gap));
    return fmt("gap=%.3g", gap);
  });

  record("mixture endpoints", [&]() {
    const BoundReport r = check_lower_bounds(random_bound_case(seed + 200000));
    if (r.mixture_bounds.front() != r.extra_bound || r.mixture_bounds.back() != r.train_bound) {
      throw Error(ErrorCode::BoundViolation, "alpha = 0 / 1 do not reduce to the single bounds");
    }
    return std::string("alpha=0 -> extra bound, alpha=1 -> train bound");
  });
  return rep;
}

SuiteReport run_ggn_suite(std::uint64_t seed) {
  SuiteReport rep;
  auto record = [&rep](const std::string& name, const std::function<std::string()>& body) {
    try {
      rep.lines.push_back("ok   " + name + " " + body());
    } catch (const Error& e) {
      ++rep.failures;
      rep.lines.push_back("FAIL " + name + " " + e.what());
    }
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_history = [&](std::size_t n, std::size_t d, std::size_t k) {
    std::vector<HeadSample> hist;
    std::uniform_int_distribution<std::size_t> label(0, k - 1);
    for (std::size_t i = 0; i < n; ++i) {
      HeadSample s{Vector(d), Vector(k), label(rng)};
      for (double& v : s.h) v = normal(rng);
      for (double& v : s.f) v = 2.0 * normal(rng);
      hist.push_back(std::move(s));
    }
    return hist;
  };

  record("softmax Hessian PSD, zero row sums", [&]() {
    double worst_row = 0, min_eig = INFINITY;
    for (int t = 0; t < 20; ++t) {
      Vector f(5);
      for (double& v : f) v = 3.0 * normal(rng);
      const Matrix lambda = softmax_hessian(f);
      for (std::size_t i = 0; i < 5; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < 5; ++j) s += lambda(i, j);
        worst_row = std::max(worst_row, std::abs(s));
      }
      min_eig = std::min(min_eig, symmetric_eigenvalues(lambda).front());
    }
    if (worst_row > 1e-12 || min_eig < -1e-12) {
      throw Error(ErrorCode::BoundViolation, fmt("row sum %.3g, min eigenvalue %.3g", worst_row, min_eig));
    }
    return fmt("max |row sum|=%.2g min eig=%.2g", worst_row, min_eig);
  });

  record("full GGN symmetric PSD", [&]() {
    double min_eig = INFINITY;
    for (int t = 0; t < 10; ++t) {
      const Matrix g = full_ggn_last_layer(random_history(12, 4, 3), 0.5, 4, 3);
      if (!is_symmetric(g, 1e-12)) throw Error(ErrorCode::BoundViolation, "GGN not symmetric");
      min_eig = std::min(min_eig, symmetric_eigenvalues(g).front());
    }
    if (min_eig < 0.5 - 1e-9) throw Error(ErrorCode::BoundViolation, fmt("min eigenvalue %.6g < tau0", min_eig));
    return fmt("min eigenvalue=%.6g (tau0=0.5)", min_eig);
  });

  record("no data gives tau0 I", [&]() {
    const Matrix g = full_ggn_last_layer({}, 2.5, 3, 4);
    if (!(g == 2.5 * Matrix::identity(12))) throw Error(ErrorCode::BoundViolation, "prior-only GGN");
    return std::string("exact");
  });

  record("KFAC zero-data identity", [&]() {
    std::vector<Vector> probes(3, Vector(4));
    for (auto& p : probes)
      for (double& v : p) v = normal(rng);
    for (double tau : {1.0, 4.0}) {
      const KfacFidelity f = kfac_fidelity({}, tau, 500.0, 4, 3, probes);
      if (f.relative_frobenius_gap != 0.0) {
        throw Error(ErrorCode::BoundViolation, fmt("gap %.3g with no data", f.relative_frobenius_gap));
      }
      for (double g : f.predictive_gaps) {
        if (g > 1e-12) throw Error(ErrorCode::BoundViolation, fmt("predictive gap %.3g", g));
      }
    }
    return std::string("gap=0");
  });

  record("KFAC fidelity readout", [&]() {
    auto hist = random_history(64, 4, 3);
    std::vector<Vector> probes(4, Vector(4));
    for (auto& p : probes)
      for (double& v : p) v = normal(rng);
    const KfacFidelity f = kfac_fidelity(hist, 1.0, 64.0, 4, 3, probes);
    double worst = 0;
    for (double g : f.predictive_gaps) worst = std::max(worst, g);
    return fmt("frobenius gap=%.4f worst predictive gap=%.4f (informational)", f.relative_frobenius_gap, worst);
  });

  record("predictive covariance by sampling", [&]() {
    LaplaceState s = init_laplace(1.0, 200.0, 4, 3, 0.0);
    auto hist = random_history(16, 4, 3);
    std::vector<Vector> hs, gs;
    for (const auto& h : hist) {
      hs.push_back(h.h);
      gs.push_back(softmax_ce_grad(h.f, h.y));
    }
    update_curvature(s, hs, gs);
    const PredictiveGaussian p = predictive(s, hist[0].h, hist[0].f);
    const std::size_t n = 100000;
    const Matrix draws = sample_logits(p, n, seed);
    Matrix cov(3, 3);
    Vector mean(3, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t a = 0; a < 3; ++a) mean[a] += draws(r, a) / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
          cov(a, b) += (draws(r, a) - mean[a]) * (draws(r, b) - mean[b]) / static_cast<double>(n - 1);
    const Matrix expected = p.covariance();
    const double err = max_abs(cov - expected) / max_abs(expected);
    if (err > 0.05) throw Error(ErrorCode::BoundViolation, fmt("relative error %.3g", err));
    return fmt("max entry error / max entry=%.4f", err);
  });
  return rep;
}

}  // namespace bsel::oracle
