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

#include "bsel/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "bsel/error.hpp"

namespace bsel {

namespace {

constexpr char kMagic[5] = {'B', 'S', 'E', 'L', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw Error(ErrorCode::ParseError, path + ": truncated binary dataset");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }
double read_f64(std::istream& in, const std::string& path) {
  return std::bit_cast<double>(read_u64(in, path));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Exact count guard against representations like 0.1 * 30 = 3.0000000000000004.
std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + 1e-9)); }

LabeledDataset select_rows(const LabeledDataset& ds, const std::vector<std::size_t>& keep) {
  LabeledDataset out;
  out.num_classes = ds.num_classes;
  out.split = ds.split;
  out.features = Matrix(keep.size(), ds.input_dim());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t i = keep[r];
    std::copy(ds.features.row(i).begin(), ds.features.row(i).end(), out.features.row(r).begin());
    out.labels.push_back(ds.labels[i]);
    out.clean_labels.push_back(ds.clean_labels[i]);
    out.noise_flags.push_back(ds.noise_flags[i]);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t y : labels) ++counts.at(y);
  return counts;
}

void LabeledDataset::validate() const {
  const std::size_t n = labels.size();
  if (features.rows() != n || clean_labels.size() != n || noise_flags.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "dataset columns have different lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= num_classes || clean_labels[i] >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "example " + std::to_string(i));
    }
    if ((noise_flags[i] != 0) != (labels[i] != clean_labels[i])) {
      throw Error(ErrorCode::ParseError, "noise flag disagrees with labels at " + std::to_string(i));
    }
  }
}

SyntheticData gen_synthetic(std::size_t k, std::size_t per_class, std::size_t input_dim,
                            double separation, std::uint64_t seed,
                            std::size_t test_per_class) {
  if (k < 2 || per_class == 0 || input_dim == 0) {
    throw Error(ErrorCode::InvalidDimensions, "synthetic data needs k >= 2, n > 0, dim > 0");
  }
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw Error(ErrorCode::InvalidDimensions, "separation must be finite and >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double radius = separation / std::sqrt(2.0);
  Matrix means(k, input_dim);
  if (k <= input_dim) {
    for (std::size_t c = 0; c < k; ++c) means(c, c) = radius;
  } else {
    for (std::size_t c = 0; c < k; ++c) {
      auto row = means.row(c);
      for (double& v : row) v = normal(rng);
      const double len = norm2(row);
      for (double& v : row) v *= radius / len;
    }
  }

  auto draw = [&](std::size_t count, Split split, std::mt19937_64& gen) {
    LabeledDataset ds;
    ds.num_classes = k;
    ds.split = split;
    ds.features = Matrix(k * count, input_dim);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < count; ++i) {
        auto row = ds.features.row(c * count + i);
        for (std::size_t j = 0; j < input_dim; ++j) row[j] = means(c, j) + normal(gen);
        ds.labels.push_back(c);
      }
    }
    ds.clean_labels = ds.labels;
    ds.noise_flags.assign(ds.labels.size(), 0);
    return ds;
  };

  std::mt19937_64 train_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 test_rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
  SyntheticData out;
  out.train = draw(per_class, Split::Train, train_rng);
  out.test = draw(test_per_class, Split::Test, test_rng);
  return out;
}

LabeledDataset load_csv(const std::string& path, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<Vector> rows;
  std::vector<std::size_t> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_double(fields[i], values[i]);
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (fields.size() < 2) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": need label and features");
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(width) + " fields");
    }
    const double lab = values[0];
    if (lab < 0 || lab != std::floor(lab)) {
      throw Error(ErrorCode::LabelOutOfRange, path + ":" + std::to_string(line_no));
    }
    labels.push_back(static_cast<std::size_t>(lab));
    rows.emplace_back(values.begin() + 1, values.end());
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, path + ": no data rows");

  LabeledDataset ds;
  const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
  ds.num_classes = num_classes == 0 ? max_label + 1 : num_classes;
  if (max_label >= ds.num_classes) {
    throw Error(ErrorCode::LabelOutOfRange,
                path + ": label " + std::to_string(max_label) + " with k=" + std::to_string(ds.num_classes));
  }
  ds.features = Matrix::from_rows(rows);
  ds.labels = labels;
  ds.clean_labels = labels;
  ds.noise_flags.assign(labels.size(), 0);
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.precision(17);
  out << "label";
  for (std::size_t j = 0; j < ds.input_dim(); ++j) out << ",feat_" << j;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (double v : ds.features.row(i)) out << ',' << v;
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

void save_binary(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, ds.size());
  write_u64(out, ds.input_dim());
  write_u64(out, ds.num_classes);
  write_u64(out, ds.split == Split::Train ? 0 : 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    write_f64(out, static_cast<double>(ds.labels[i]));
    write_f64(out, static_cast<double>(ds.clean_labels[i]));
    for (double v : ds.features.row(i)) write_f64(out, v);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

LabeledDataset load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw Error(ErrorCode::ParseError, path + ": bad magic, expected BSEL1");
  }
  const std::uint64_t n = read_u64(in, path);
  const std::uint64_t dim = read_u64(in, path);
  const std::uint64_t k = read_u64(in, path);
  const std::uint64_t split = read_u64(in, path);
  if (dim == 0 || k == 0 || split > 1 || n > (1ULL << 40) / (dim + 2)) {
    throw Error(ErrorCode::ParseError, path + ": implausible header");
  }
  LabeledDataset ds;
  ds.num_classes = k;
  ds.split = split == 0 ? Split::Train : Split::Test;
  ds.features = Matrix(n, dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double y = read_f64(in, path);
    const double yc = read_f64(in, path);
    if (!(y >= 0 && y < static_cast<double>(k)) || !(yc >= 0 && yc < static_cast<double>(k))) {
      throw Error(ErrorCode::LabelOutOfRange, path + ": example " + std::to_string(i));
    }
    ds.labels.push_back(static_cast<std::size_t>(y));
    ds.clean_labels.push_back(static_cast<std::size_t>(yc));
    ds.noise_flags.push_back(ds.labels.back() != ds.clean_labels.back());
    for (double& v : ds.features.row(i)) v = read_f64(in, path);
  }
  return ds;
}

LabeledDataset load_dataset(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) return load_binary(path);
  return load_csv(path);
}

LabeledDataset inject_symmetric_noise(const LabeledDataset& ds, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::InvalidRate, "noise rate must be in [0, 1), got " + std::to_string(rate));
  }
  LabeledDataset out = ds;
  out.labels = ds.clean_labels;
  out.noise_flags.assign(ds.size(), 0);
  const std::size_t flips = floor_count(rate * static_cast<double>(ds.size()));
  if (flips == 0) return out;
  if (ds.num_classes < 2) throw Error(ErrorCode::InvalidRate, "cannot flip labels with k < 2");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first `flips` slots are a uniform sample.
  for (std::size_t i = 0; i < flips; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::uniform_int_distribution<std::size_t> other(0, ds.num_classes - 2);
  for (std::size_t i = 0; i < flips; ++i) {
    const std::size_t idx = order[i];
    const std::size_t r = other(rng);
    out.labels[idx] = r < ds.clean_labels[idx] ? r : r + 1;
    out.noise_flags[idx] = 1;
  }
  return out;
}

LabeledDataset make_imbalanced(const LabeledDataset& ds, double imbalance_ratio) {
  if (!(imbalance_ratio >= 1.0) || !std::isfinite(imbalance_ratio)) {
    throw Error(ErrorCode::InvalidRate, "imbalance ratio must be >= 1");
  }
  const std::size_t k = ds.num_classes;
  const auto counts = ds.class_counts();
  const std::size_t n_max = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> quota(k, n_max);
  for (std::size_t c = 0; c < k && k > 1; ++c) {
    const double exponent = -static_cast<double>(c) / static_cast<double>(k - 1);
    quota[c] = floor_count(static_cast<double>(n_max) * std::pow(imbalance_ratio, exponent));
    if (counts[c] < quota[c]) {
      throw Error(ErrorCode::InsufficientClassCount,
                  "class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                      " examples, needs " + std::to_string(quota[c]));
    }
  }
  std::vector<std::size_t> taken(k, 0);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t y = ds.labels[i];
    if (taken[y] < quota[y]) {
      ++taken[y];
      keep.push_back(i);
    }
  }
  return select_rows(ds, keep);
}

LabeledDataset take_fraction(const LabeledDataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidRate, "subset fraction must be in (0, 1]");
  }
  if (fraction == 1.0) return ds;
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
  order.resize(std::max<std::size_t>(m, 1));
  std::sort(order.begin(), order.end());
  return select_rows(ds, order);
}

BatchStream::BatchStream(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : dataset_size_(dataset_size), batch_size_(batch_size), seed_(seed) {
  if (batch_size == 0 || dataset_size < batch_size) {
    throw Error(ErrorCode::BatchTooSmall, "dataset of " + std::to_string(dataset_size) +
                                              " cannot fill a batch of " + std::to_string(batch_size));
  }
  reshuffle();
}

void BatchStream::reshuffle() {
  order_.resize(dataset_size_);
  std::iota(order_.begin(), order_.end(), 0);
  std::mt19937_64 rng(seed_ + epoch_);
  std::shuffle(order_.begin(), order_.end(), rng);
}

void BatchStream::seek(std::size_t epoch, std::size_t position) {
  if (position >= batches_per_epoch()) {
    throw Error(ErrorCode::IndexOutOfRange, "batch position past end of epoch");
  }
  epoch_ = epoch;
  position_ = position;
  reshuffle();
}

BatchDraw BatchStream::next_batch() {
  BatchDraw draw;
  draw.epoch = epoch_;
  const auto first = order_.begin() + static_cast<std::ptrdiff_t>(position_ * batch_size_);
  draw.indices.assign(first, first + static_cast<std::ptrdiff_t>(batch_size_));
  ++position_;
  if (position_ == batches_per_epoch()) {
    draw.epoch_end = true;
    ++epoch_;
    position_ = 0;
    reshuffle();
  }
  return draw;
}

}  // namespace bsel
