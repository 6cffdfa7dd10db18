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
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "bsel/data.hpp"
#include "bsel/error.hpp"
#include "bsel/reference.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bsel;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "bsel_test_reference";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("load_reference hand file and errors") {
  const auto p = temp_path("ref.txt");
  write_file(p, "k=3 n=3 tau=2\n0 1 2 3\n1 0 0 0\n2 -1 0.5 4\n");
  const ReferenceTable t = load_reference(p.string());
  CHECK(t.size() == 3);
  CHECK(t.num_classes() == 3);
  CHECK(t.temperature() == 2.0);
  CHECK(t.logits()(2, 2) == 4.0);

  // Rows may come in any order.
  write_file(p, "k=2 n=2 tau=1\n1 0 1\n0 1 0\n");
  CHECK(load_reference(p.string()).logits()(0, 0) == 1.0);

  std::string gap = "k=2 n=10 tau=1\n";
  for (int i = 0; i < 10; ++i)
    if (i != 7) gap += std::to_string(i) + " 0 0\n";
  write_file(p, gap);
  try {
    load_reference(p.string());
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingExample);
    CHECK(std::string(e.what()).find('7') != std::string::npos);
  }
  write_file(p, "k=3 n=1 tau=1\n0 1 2\n");
  CHECK(code_of([&] { load_reference(p.string()); }) == ErrorCode::DimensionMismatch);
  write_file(p, "k=2 n=1 tau=1\n0 1 x\n");
  CHECK(code_of([&] { load_reference(p.string()); }) == ErrorCode::ParseError);
  write_file(p, "garbage\n");
  CHECK(code_of([&] { load_reference(p.string()); }) == ErrorCode::ParseError);
  write_file(p, "k=2 n=2 tau=1\n0 1 2\n0 1 2\n");
  CHECK(code_of([&] { load_reference(p.string()); }) == ErrorCode::ParseError);
}

TEST_CASE("save/load round trip is bit-exact and checksums the id set") {
  std::mt19937_64 rng(3);
  Matrix logits = bsel::testing::random_matrix(20, 4, rng, 7.0);
  logits(0, 0) = 1.0 / 3.0;
  const ReferenceTable t(logits, 1.7, "unit test");
  const auto p = temp_path("rt.txt");
  save_reference(t, p.string());
  const ReferenceTable back = load_reference(p.string());
  CHECK(back.logits() == t.logits());
  CHECK(back.temperature() == t.temperature());
  CHECK(back.provenance() == "unit test");
  CHECK(back.id_checksum() == t.id_checksum());
  CHECK(ReferenceTable(Matrix(21, 4), 1.0, "").id_checksum() != t.id_checksum());

  CHECK_NOTHROW(t.require_covers(20, 4));
  CHECK(code_of([&] { t.require_covers(21, 4); }) == ErrorCode::MissingExample);
  CHECK(code_of([&] { t.require_covers(20, 3); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { t.require_covers(19, 4); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("ref_log_prob hand values and properties") {
  const ReferenceTable zeros(Matrix(1, 5, 0.0), 3.0, "");
  for (std::size_t y = 0; y < 5; ++y) CHECK(ref_log_prob(zeros, 0, y) == doctest::Approx(-std::log(5.0)).epsilon(1e-15));

  const ReferenceTable hand(Matrix::from_rows({{2.0, 0.0}}), 2.0, "");
  CHECK(ref_log_prob(hand, 0, 0) == doctest::Approx(-std::log1p(std::exp(-1.0))).epsilon(1e-15));

  std::mt19937_64 rng(9);
  const Matrix logits = bsel::testing::random_matrix(30, 4, rng, 5.0);
  ReferenceTable t(logits, 1.0, "");
  for (std::size_t i = 0; i < 30; ++i) {
    double s = 0;
    for (std::size_t y = 0; y < 4; ++y) {
      CHECK(ref_log_prob(t, i, y) <= 0.0);
      s += std::exp(ref_log_prob(t, i, y));
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }

  // Scaling logits by c and tau by c cancels.
  Matrix scaled = logits;
  for (double& v : scaled.data()) v *= 3.5;
  const ReferenceTable ts(scaled, 3.5, "");
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t y = 0; y < 4; ++y) CHECK(ref_log_prob(ts, i, y) == doctest::Approx(ref_log_prob(t, i, y)).epsilon(1e-12));

  // Argmax invariant to tau; growing tau moves toward -log k monotonically.
  for (std::size_t i = 0; i < 30; ++i) {
    std::size_t best = argmax(logits.row(i));
    double prev = ref_log_prob(t, i, best);
    for (double tau : {2.0, 4.0, 8.0, 64.0, 1e6}) {
      t.set_temperature(tau);
      Vector lp(4);
      for (std::size_t y = 0; y < 4; ++y) lp[y] = ref_log_prob(t, i, y);
      CHECK(argmax(lp) == best);
      CHECK(lp[best] <= prev + 1e-15);
      CHECK(lp[best] >= -std::log(4.0) - 1e-12);
      prev = lp[best];
    }
    CHECK(prev == doctest::Approx(-std::log(4.0)).epsilon(1e-5));
    t.set_temperature(1.0);
  }
  CHECK(code_of([&] { ref_log_prob(t, 30, 0); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { ref_log_prob(t, 0, 4); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { t.set_temperature(0.0); }) == ErrorCode::InvalidHyperparameter);
}

TEST_CASE("ref_accuracy onehot, tie rule and brute-force recount") {
  Matrix onehot(4, 3);
  const std::vector<std::size_t> labels{0, 2, 1, 2};
  for (std::size_t i = 0; i < 4; ++i) onehot(i, labels[i]) = 1.0;
  CHECK(ref_accuracy(ReferenceTable(onehot, 1.0, ""), labels) == 1.0);
  CHECK(ref_accuracy(ReferenceTable(Matrix(4, 3), 1.0, ""), labels) == 0.25);

  const SyntheticData d = gen_synthetic(2, 200, 2, 2.5, 4, 1);
  const ReferenceTable proto = prototype_reference(d.train, 0.5, 1.0, 3, "proto");
  CHECK(proto.size() == d.train.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    const double a = proto.logits()(i, 0), b = proto.logits()(i, 1);
    const std::size_t pred = b > a ? 1 : 0;
    correct += pred == d.train.clean_labels[i];
  }
  CHECK(ref_accuracy(proto, d.train.clean_labels) == static_cast<double>(correct) / 400.0);
  CHECK(ref_accuracy(proto, d.train.clean_labels) > 0.8);
}

TEST_CASE("prototype uses clean labels and is seeded") {
  const SyntheticData d = gen_synthetic(3, 300, 5, 4.0, 8, 1);
  const LabeledDataset noisy = inject_symmetric_noise(d.train, 0.4, 2);
  const ReferenceTable clean = prototype_reference(d.train, 0.3, 1.0, 6, "");
  const ReferenceTable from_noisy = prototype_reference(noisy, 0.3, 1.0, 6, "");
  CHECK(clean.logits() == from_noisy.logits());
  CHECK_FALSE(prototype_reference(d.train, 0.3, 1.0, 7, "").logits() == clean.logits());

  // Logits are -||x - mu||^2 / 2; the full-data prototype recomputed by hand.
  const ReferenceTable full = prototype_reference(d.train, 1.0, 1.0, 0, "");
  std::vector<Vector> mu(3, Vector(5, 0.0));
  for (std::size_t i = 0; i < d.train.size(); ++i)
    for (std::size_t j = 0; j < 5; ++j) mu[d.train.labels[i]][j] += d.train.features(i, j) / 300.0;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0;
      for (std::size_t j = 0; j < 5; ++j) s += (d.train.features(i, j) - mu[c][j]) * (d.train.features(i, j) - mu[c][j]);
      CHECK(full.logits()(i, c) == doctest::Approx(-0.5 * s).epsilon(1e-12));
    }
}

TEST_CASE("reference_from_logits reads comma or space separated rows") {
  const auto p = temp_path("logits.csv");
  write_file(p, "1,2,3\n4 5 6\n");
  const ReferenceTable t = reference_from_logits(p.string(), 0.5, "ext");
  CHECK(t.size() == 2);
  CHECK(t.logits()(1, 2) == 6.0);
  CHECK(t.temperature() == 0.5);
  write_file(p, "1,2,3\n4,5\n");
  CHECK(code_of([&] { reference_from_logits(p.string(), 1.0, ""); }) != ErrorCode::IoError);
}
