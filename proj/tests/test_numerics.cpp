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
#include <numeric>
#include <random>

#include "bsel/error.hpp"
#include "bsel/numerics.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bsel;
using bsel::testing::random_spd;
using bsel::testing::random_vector;

TEST_CASE("cholesky of identity and diagonal matrices") {
  const LowerTriangular l = cholesky(Matrix::identity(2));
  CHECK(l.matrix() == Matrix::identity(2));
  CHECK(l.jitter() == 0.0);

  const LowerTriangular d = cholesky(Matrix::from_rows({{4, 0}, {0, 9}}));
  CHECK(d(0, 0) == 2.0);
  CHECK(d(1, 1) == 3.0);
  CHECK(d(1, 0) == 0.0);
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = random_spd(5, rng);
    const LowerTriangular l = cholesky(m);
    CHECK(frobenius_norm(l.reconstruct() - m) <= 1e-8 * frobenius_norm(m));
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(l(i, i) > 0.0);
      for (std::size_t j = i + 1; j < 5; ++j) CHECK(l(i, j) == 0.0);
    }
  }
}

TEST_CASE("cholesky applies requested jitter") {
  const LowerTriangular l = cholesky(Matrix(3, 3, 0.0), 0.25);
  CHECK(l.reconstruct() == 0.25 * Matrix::identity(3));
}

TEST_CASE("cholesky jitter ladder rescues a marginally indefinite matrix") {
  // Rank one with a tiny negative perturbation on the null direction.
  Matrix m = Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0 - 1e-13}});
  const LowerTriangular l = cholesky(m);
  CHECK(l.jitter() > 0.0);
  CHECK(l.jitter() <= 1e-6);
}

TEST_CASE("cholesky rejects indefinite and asymmetric input") {
  CHECK_THROWS_AS(cholesky(Matrix::from_rows({{1, 0}, {0, -1}})), Error);
  try {
    cholesky(Matrix::from_rows({{1, 0}, {0, -1}}));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
  try {
    cholesky(Matrix::from_rows({{2, 1}, {0, 2}}));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
}

TEST_CASE("solve_psd on hand cases and random systems") {
  const Vector e1 = solve_psd(cholesky(Matrix::identity(2)), Vector{1, 0});
  CHECK(e1 == Vector{1, 0});
  const Vector ones = solve_psd(cholesky(Matrix::from_rows({{4, 0}, {0, 9}})), Vector{4, 9});
  CHECK(ones[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ones[1] == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = random_spd(6, rng);
    const Vector b = random_vector(6, rng);
    const Vector x = solve_psd(cholesky(m), b);
    const Vector mx = m * x;
    double r = 0;
    for (std::size_t i = 0; i < 6; ++i) r += (mx[i] - b[i]) * (mx[i] - b[i]);
    CHECK(std::sqrt(r) / norm2(b) <= 1e-8);
  }
  try {
    solve_psd(cholesky(Matrix::identity(2)), Vector{1, 2, 3});
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("triangular inverse matches solves") {
  std::mt19937_64 rng(3);
  const Matrix m = random_spd(4, rng);
  const Matrix inv = cholesky(m).inverse();
  CHECK(max_abs(m * inv - Matrix::identity(4)) < 1e-10);
}

TEST_CASE("sample_gaussian degenerate, deterministic and moment checks") {
  const Vector mean{1.0, -2.0, 0.5};
  for (const Vector& s : sample_gaussian(mean, Matrix(3, 3, 0.0), 50, 9)) CHECK(s == mean);

  const auto a = sample_gaussian(mean, Matrix::identity(3), 100, 42);
  const auto b = sample_gaussian(mean, Matrix::identity(3), 100, 42);
  CHECK(a == b);
  CHECK(a != sample_gaussian(mean, Matrix::identity(3), 100, 43));

  auto moment_error = [](std::size_t n, std::uint64_t seed) {
    const auto draws = sample_gaussian(Vector{0, 0}, Matrix::identity(2), n, seed);
    Vector mu(2, 0.0);
    for (const Vector& d : draws)
      for (int i = 0; i < 2; ++i) mu[i] += d[i] / static_cast<double>(n);
    Matrix cov(2, 2);
    for (const Vector& d : draws)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) cov(i, j) += (d[i] - mu[i]) * (d[j] - mu[j]) / static_cast<double>(n - 1);
    return std::pair{std::max(std::abs(mu[0]), std::abs(mu[1])), max_abs(cov - Matrix::identity(2))};
  };
  const auto [mean_err, cov_err] = moment_error(100000, 7);
  CHECK(mean_err < 0.02);
  CHECK(cov_err < 0.05);

  // O(1/sqrt(S)): averaged over seeds, 100x more samples shrinks the error ~10x.
  double small = 0, large = 0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    small += moment_error(1000, 100 + s).second;
    large += moment_error(100000, 200 + s).second;
  }
  const double ratio = small / large;
  CHECK(ratio > 4.0);
  CHECK(ratio < 25.0);
}

TEST_CASE("sample_gaussian matches a correlated covariance") {
  const Matrix cov = Matrix::from_rows({{2.0, 0.8}, {0.8, 1.0}});
  const std::size_t n = 100000;
  const auto draws = sample_gaussian(Vector{0, 0}, cov, n, 77);
  Matrix emp(2, 2);
  for (const Vector& d : draws)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) emp(i, j) += d[i] * d[j] / static_cast<double>(n);
  CHECK(max_abs(emp - cov) < 0.05);
}

TEST_CASE("log_softmax symmetry, stability and high-precision agreement") {
  const Vector two = log_softmax(Vector{0, 0});
  CHECK(two[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(two[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));

  const Vector big = log_softmax(Vector{1000, 0});
  CHECK(std::isfinite(big[0]));
  CHECK(std::abs(big[0]) < 1e-300);
  CHECK(big[1] == doctest::Approx(-1000.0));

  const Vector f{1, 2, 3};
  const Vector ls = log_softmax(f);
  long double z = 0;
  for (double v : f) z += std::exp(static_cast<long double>(v));
  for (int i = 0; i < 3; ++i) {
    const long double oracle = static_cast<long double>(f[i]) - std::log(z);
    CHECK(std::abs(static_cast<long double>(ls[i]) - oracle) < 1e-12L);
  }
}

TEST_CASE("log_softmax outputs are log-probabilities") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const Vector f = random_vector(7, rng, 10.0);
    const Vector ls = log_softmax(f);
    double s = 0;
    for (double v : ls) {
      CHECK(v <= 0.0);
      s += std::exp(v);
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("softmax_ce_grad values, zero sum, finite differences") {
  const Vector g = softmax_ce_grad(Vector{0, 0}, 0);
  CHECK(g[0] == doctest::Approx(-0.5));
  CHECK(g[1] == doctest::Approx(0.5));

  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    const Vector f = random_vector(5, rng, 2.0);
    const std::size_t y = static_cast<std::size_t>(t % 5);
    const Vector grad = softmax_ce_grad(f, y);
    CHECK(std::abs(std::accumulate(grad.begin(), grad.end(), 0.0)) < 1e-12);
    for (std::size_t j = 0; j < 5; ++j) {
      Vector fp = f, fm = f;
      const double h = 1e-5;
      fp[j] += h;
      fm[j] -= h;
      const double fd = (-log_softmax(fp)[y] + log_softmax(fm)[y]) / (2 * h);
      CHECK(std::abs(fd - grad[j]) < 1e-6);
    }
  }
  try {
    softmax_ce_grad(Vector{0, 0}, 2);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndexOutOfRange);
  }
}

TEST_CASE("argmax ties go to the lower index") {
  CHECK(argmax(Vector{1, 3, 3}) == 1);
  CHECK(argmax(Vector{0, 0, 0}) == 0);
}

TEST_CASE("kron layout and symmetric eigenvalues") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{0, 5}, {6, 7}});
  const Matrix k = kron(a, b);
  CHECK(k.rows() == 4);
  CHECK(k(0, 1) == 5);
  CHECK(k(1, 0) == 6);
  CHECK(k(2, 3) == 4 * 5);
  CHECK(k(3, 2) == 4 * 6);

  const Vector ev = symmetric_eigenvalues(Matrix::from_rows({{2, 1}, {1, 2}}));
  CHECK(ev[0] == doctest::Approx(1.0));
  CHECK(ev[1] == doctest::Approx(3.0));
}
