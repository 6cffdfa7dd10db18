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

// Fixed external predictor stored as a table of raw logits per training
// example. Stands in for a zero-shot model, and doubles as the holdout model
// of the irreducible-loss baseline. The temperature is applied at query time.

#ifndef BSEL_REFERENCE_HPP_
#define BSEL_REFERENCE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bsel/data.hpp"
#include "bsel/numerics.hpp"

namespace bsel {

class ReferenceTable {
 public:
  ReferenceTable() = default;
  ReferenceTable(Matrix logits, double temperature, std::string provenance);

  std::size_t size() const noexcept { return logits_.rows(); }
  std::size_t num_classes() const noexcept { return logits_.cols(); }
  double temperature() const noexcept { return temperature_; }
  void set_temperature(double tau);
  const std::string& provenance() const noexcept { return provenance_; }
  const Matrix& logits() const noexcept { return logits_; }
  /// FNV-1a over the id sequence 0..n-1 and k; identifies the covered id set.
  std::uint64_t id_checksum() const noexcept { return id_checksum_; }

  /// Throws MissingExample / DimensionMismatch unless the table covers ids
  /// 0..n-1 with k classes.
  void require_covers(std::size_t n, std::size_t k) const;

 private:
  Matrix logits_;
  double temperature_ = 1.0;
  std::string provenance_;
  std::uint64_t id_checksum_ = 0;
};

/// File layout: optional `# provenance: ...` comment, header
/// `k=<int> n=<int> tau=<float>`, then `id logit_0 ... logit_{k-1}` per line.
ReferenceTable load_reference(const std::string& path);
void save_reference(const ReferenceTable& table, const std::string& path);

/// log softmax(logits[id] / tau)[y]
double ref_log_prob(const ReferenceTable& table, std::size_t id, std::size_t y);

/// Fraction of ids whose argmax logit (ties toward the lower class) equals the label.
double ref_accuracy(const ReferenceTable& table, const std::vector<std::size_t>& labels);

/// Nearest-class-mean predictor fitted on a seeded `clean_fraction` of `ds`
/// using its clean labels; logit_c = -||x - mu_c||^2 / 2.
ReferenceTable prototype_reference(const LabeledDataset& ds, double clean_fraction,
                                   double temperature, std::uint64_t seed,
                                   const std::string& provenance);

/// Rows `logit_0,...,logit_{k-1}` (comma or space separated), row i is id i.
ReferenceTable reference_from_logits(const std::string& path, double temperature,
                                     const std::string& provenance);

}  // namespace bsel

#endif  // BSEL_REFERENCE_HPP_
