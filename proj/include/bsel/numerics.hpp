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

// Small dense linear algebra and probability kernels. Everything is 64-bit
// floating point and row-major; matrices here are at most a few hundred wide.

#ifndef BSEL_NUMERICS_HPP_
#define BSEL_NUMERICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bsel {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Vector operator*(const Matrix& a, std::span<const double> x);

Matrix transpose(const Matrix& a);
Matrix kron(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// a += s * x x^T
void add_outer(Matrix& a, std::span<const double> x, double s = 1.0);

/// Replaces a by (a + a^T) / 2.
void symmetrize(Matrix& a);

/// True when |a_ij - a_ji| <= rel_tol * max|a| for all i, j.
bool is_symmetric(const Matrix& a, double rel_tol = 1e-10);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
Vector symmetric_eigenvalues(const Matrix& a);

/// Lower-triangular Cholesky factor L with L L^T = M + jitter I.
class LowerTriangular {
 public:
  LowerTriangular() = default;
  LowerTriangular(Matrix l, double jitter) : l_(std::move(l)), jitter_(jitter) {}

  std::size_t n() const noexcept { return l_.rows(); }
  const Matrix& matrix() const noexcept { return l_; }
  double operator()(std::size_t r, std::size_t c) const { return l_(r, c); }
  /// Total diagonal shift that was needed for the factorization to succeed.
  double jitter() const noexcept { return jitter_; }

  /// Solves L x = b.
  Vector forward_solve(std::span<const double> b) const;
  /// Solves L^T x = b.
  Vector back_solve(std::span<const double> b) const;
  /// L L^T
  Matrix reconstruct() const;
  /// (L L^T)^{-1}
  Matrix inverse() const;

 private:
  Matrix l_;
  double jitter_ = 0.0;
};

/// Factorizes M + jitter I. If that fails, retries with the ladder
/// {1e-10, 1e-8, 1e-6} times the mean diagonal added on top of `jitter`, then
/// throws NotPositiveDefinite.
LowerTriangular cholesky(const Matrix& m, double jitter = 0.0);

/// Returns x with (L L^T) x = b.
Vector solve_psd(const LowerTriangular& l, std::span<const double> b);

/// S i.i.d. draws from N(mean, cov). Deterministic for a fixed seed.
std::vector<Vector> sample_gaussian(std::span<const double> mean, const Matrix& cov,
                                    std::size_t samples, std::uint64_t seed);

double log_sum_exp(std::span<const double> f);
Vector log_softmax(std::span<const double> f);
Vector softmax(std::span<const double> f);

/// Gradient of -log softmax(f)[y] with respect to f: softmax(f) - onehot(y).
Vector softmax_ce_grad(std::span<const double> f, std::size_t y);

/// Index of the largest entry, ties toward the lower index.
std::size_t argmax(std::span<const double> f);

}  // namespace bsel

#endif  // BSEL_NUMERICS_HPP_
