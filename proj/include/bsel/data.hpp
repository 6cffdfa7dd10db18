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

#ifndef BSEL_DATA_HPP_
#define BSEL_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bsel/model.hpp"
#include "bsel/numerics.hpp"

namespace bsel {

enum class Split { Train, Test };

struct LabeledDataset {
  Matrix features;  // n x input_dim
  std::vector<std::size_t> labels;
  std::vector<std::size_t> clean_labels;
  std::vector<std::uint8_t> noise_flags;
  std::size_t num_classes = 0;
  Split split = Split::Train;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t input_dim() const noexcept { return features.cols(); }
  Sample sample(std::size_t i) const { return {features.row(i), labels[i]}; }
  std::vector<std::size_t> class_counts() const;
  /// Throws ParseError/LabelOutOfRange style errors when the record is inconsistent.
  void validate() const;

  bool operator==(const LabeledDataset&) const = default;
};

struct SyntheticData {
  LabeledDataset train;
  LabeledDataset test;
};

/// k isotropic unit-variance Gaussian clusters whose means are pairwise
/// `separation` apart (scaled basis vectors when k <= input_dim, random
/// directions otherwise). Examples are stored grouped by class.
SyntheticData gen_synthetic(std::size_t k, std::size_t per_class, std::size_t input_dim,
                            double separation, std::uint64_t seed,
                            std::size_t test_per_class);

/// Rows `label,feat_0,...`. A first line that does not parse as numbers is
/// taken as a header. `num_classes` of 0 infers k = max label + 1.
LabeledDataset load_csv(const std::string& path, std::size_t num_classes = 0);
void save_csv(const LabeledDataset& ds, const std::string& path);

/// Compact binary file: magic "BSEL1", then little-endian u64 n, input_dim, k,
/// split, then per example label, clean label and features as float64.
LabeledDataset load_binary(const std::string& path);
void save_binary(const LabeledDataset& ds, const std::string& path);

/// Reads .csv or .bin by extension.
LabeledDataset load_dataset(const std::string& path);

/// Flips exactly floor(rate * n) labels, chosen uniformly without replacement,
/// each to a uniformly drawn other class. Flips are relative to clean labels.
LabeledDataset inject_symmetric_noise(const LabeledDataset& ds, double rate,
                                      std::uint64_t seed);

/// Long-tailed subsample: class c keeps its first floor(n_max * ratio^{-c/(k-1)})
/// examples in stored order.
LabeledDataset make_imbalanced(const LabeledDataset& ds, double imbalance_ratio);

/// Keeps a seed-determined subset of round(fraction * n) examples, stored order preserved.
LabeledDataset take_fraction(const LabeledDataset& ds, double fraction, std::uint64_t seed);

struct BatchDraw {
  std::vector<std::size_t> indices;
  bool epoch_end = false;
  std::size_t epoch = 0;  // 0-based epoch the batch belongs to
};

/// Seeded per-epoch permutations cut into batches of `batch_size`; the
/// trailing partial batch is dropped.
class BatchStream {
 public:
  BatchStream(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);

  BatchDraw next_batch();

  std::size_t batches_per_epoch() const noexcept { return dataset_size_ / batch_size_; }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t position() const noexcept { return position_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Restores a stream to (epoch, position) as reported by a previous instance.
  void seek(std::size_t epoch, std::size_t position);

 private:
  void reshuffle();

  std::size_t dataset_size_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t position_ = 0;  // batches already drawn in this epoch
  std::vector<std::size_t> order_;
};

}  // namespace bsel

#endif  // BSEL_DATA_HPP_
