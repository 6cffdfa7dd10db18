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

#include "bsel/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "bsel/error.hpp"

namespace bsel {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                    "x" + std::to_string(b.cols()));
  }
}

// Plain Cholesky-Banachiewicz; returns false on a non-positive pivot.
bool try_cholesky(const Matrix& m, double shift, Matrix& l) {
  const std::size_t n = m.rows();
  l = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m(i, j);
      if (i == j) s += shift;
      for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return true;
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) {
      throw Error(ErrorCode::DimensionMismatch, "ragged rows in Matrix::from_rows");
    }
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix product inner dimensions");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aip * b(p, j);
    }
  }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator+");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator-");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix-vector product");
  }
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          out(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return out;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void add_outer(Matrix& a, std::span<const double> x, double s) {
  if (a.rows() != x.size() || a.cols() != x.size()) {
    throw Error(ErrorCode::ShapeMismatch, "add_outer");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = s * x[i];
    for (std::size_t j = 0; j < x.size(); ++j) a(i, j) += xi * x[j];
  }
}

void symmetrize(Matrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = m;
      a(j, i) = m;
    }
  }
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (!a.square()) return false;
  const double scale = std::max(max_abs(a), 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

Vector symmetric_eigenvalues(const Matrix& input) {
  if (!input.square()) throw Error(ErrorCode::ShapeMismatch, "eigenvalues of non-square");
  Matrix a = input;
  symmetrize(a);
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-30 * std::max(1.0, frobenius_norm(a))) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Vector ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

Vector LowerTriangular::forward_solve(std::span<const double> b) const {
  const std::size_t n = l_.rows();
  if (b.size() != n) throw Error(ErrorCode::DimensionMismatch, "forward_solve");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= l_(i, j) * x[j];
    x[i] = s / l_(i, i);
  }
  return x;
}

Vector LowerTriangular::back_solve(std::span<const double> b) const {
  const std::size_t n = l_.rows();
  if (b.size() != n) throw Error(ErrorCode::DimensionMismatch, "back_solve");
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l_(j, ii) * x[j];
    x[ii] = s / l_(ii, ii);
  }
  return x;
}

Matrix LowerTriangular::reconstruct() const { return l_ * transpose(l_); }

Matrix LowerTriangular::inverse() const {
  const std::size_t n = l_.rows();
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    const Vector col = solve_psd(*this, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  symmetrize(inv);
  return inv;
}

LowerTriangular cholesky(const Matrix& m, double jitter) {
  if (!m.square()) throw Error(ErrorCode::DimensionMismatch, "cholesky of non-square");
  if (jitter < 0.0) throw Error(ErrorCode::InvalidHyperparameter, "negative jitter");
  if (!is_symmetric(m, 1e-10)) {
    throw Error(ErrorCode::NotPositiveDefinite, "cholesky input is not symmetric");
  }
  const std::size_t n = m.rows();
  Matrix l;
  if (try_cholesky(m, jitter, l)) return {std::move(l), jitter};

  double mean_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_diag += std::abs(m(i, i));
  mean_diag = n > 0 ? mean_diag / static_cast<double>(n) : 0.0;
  if (mean_diag == 0.0) mean_diag = 1.0;
  for (double step : {1e-10, 1e-8, 1e-6}) {
    const double shift = jitter + step * mean_diag;
    if (try_cholesky(m, shift, l)) return {std::move(l), shift};
  }
  throw Error(ErrorCode::NotPositiveDefinite,
              "factorization failed after jitter 1e-6 x mean diagonal (n=" +
                  std::to_string(n) + ")");
}

Vector solve_psd(const LowerTriangular& l, std::span<const double> b) {
  if (b.size() != l.n()) {
    throw Error(ErrorCode::DimensionMismatch,
                "solve_psd: factor is " + std::to_string(l.n()) + ", rhs is " +
                    std::to_string(b.size()));
  }
  return l.back_solve(l.forward_solve(b));
}

std::vector<Vector> sample_gaussian(std::span<const double> mean, const Matrix& cov,
                                    std::size_t samples, std::uint64_t seed) {
  const std::size_t k = mean.size();
  if (cov.rows() != k || cov.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "sample_gaussian covariance shape");
  }
  std::vector<Vector> out(samples, Vector(mean.begin(), mean.end()));
  if (max_abs(cov) == 0.0) return out;

  const LowerTriangular l = cholesky(cov);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(k);
  for (auto& draw : out) {
    for (double& v : z) v = normal(rng);
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j <= i; ++j) s += l(i, j) * z[j];
      draw[i] += s;
    }
  }
  return out;
}

double log_sum_exp(std::span<const double> f) {
  if (f.empty()) return -INFINITY;
  const double m = *std::max_element(f.begin(), f.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : f) s += std::exp(v - m);
  return m + std::log(s);
}

Vector log_softmax(std::span<const double> f) {
  const double lse = log_sum_exp(f);
  Vector out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] - lse;
  return out;
}

Vector softmax(std::span<const double> f) {
  Vector out = log_softmax(f);
  for (double& v : out) v = std::exp(v);
  return out;
}

Vector softmax_ce_grad(std::span<const double> f, std::size_t y) {
  if (y >= f.size()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "label " + std::to_string(y) + " with " + std::to_string(f.size()) +
                    " classes");
  }
  Vector g = softmax(f);
  g[y] -= 1.0;
  return g;
}

std::size_t argmax(std::span<const double> f) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < f.size(); ++i)
    if (f[i] > f[best]) best = i;
  return best;
}

}  // namespace bsel
