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

#include "bsel/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "bsel/error.hpp"

namespace bsel {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t checksum_ids(std::size_t n, std::size_t k) {
  std::uint64_t h = fnv1a(14695981039346656037ULL, k);
  for (std::size_t i = 0; i < n; ++i) h = fnv1a(h, i);
  return h;
}

void require_temperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::InvalidHyperparameter, "temperature must be finite and > 0");
  }
}

bool parse_number(const std::string& s, double& v) {
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size();
}

}  // namespace

ReferenceTable::ReferenceTable(Matrix logits, double temperature, std::string provenance)
    : logits_(std::move(logits)), temperature_(temperature), provenance_(std::move(provenance)) {
  require_temperature(temperature);
  for (double v : logits_.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, "non-finite reference logit");
  }
  id_checksum_ = checksum_ids(logits_.rows(), logits_.cols());
}

void ReferenceTable::set_temperature(double tau) {
  require_temperature(tau);
  temperature_ = tau;
}

void ReferenceTable::require_covers(std::size_t n, std::size_t k) const {
  if (num_classes() != k) {
    throw Error(ErrorCode::DimensionMismatch, "reference has k=" + std::to_string(num_classes()) +
                                                  ", dataset has k=" + std::to_string(k));
  }
  if (size() < n) throw Error(ErrorCode::MissingExample, std::to_string(size()));
  if (size() > n) {
    throw Error(ErrorCode::DimensionMismatch, "reference has " + std::to_string(size()) +
                                                  " rows for a dataset of " + std::to_string(n));
  }
}

ReferenceTable load_reference(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::string provenance;
  long long k = -1, n = -1;
  double tau = 0.0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("# provenance:", 0) == 0) {
      provenance = line.substr(13);
      provenance.erase(0, provenance.find_first_not_of(' '));
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (std::sscanf(line.c_str(), "k=%lld n=%lld tau=%lf", &k, &n, &tau) != 3 || k <= 0 || n < 0) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) +
                                             ": expected header 'k=<int> n=<int> tau=<float>'");
    }
    break;
  }
  if (k <= 0) throw Error(ErrorCode::ParseError, path + ": missing header");

  const auto nk = static_cast<std::size_t>(k);
  const auto nn = static_cast<std::size_t>(n);
  Matrix logits(nn, nk);
  std::vector<std::uint8_t> seen(nn, 0);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != nk + 1) {
      throw Error(ErrorCode::DimensionMismatch, path + ":" + std::to_string(line_no) + ": expected " +
                                                    std::to_string(nk) + " logits, got " +
                                                    std::to_string(tok.size() - 1));
    }
    double id_value = 0;
    if (!parse_number(tok[0], id_value) || id_value < 0 || id_value != std::floor(id_value)) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": bad id");
    }
    const auto id = static_cast<std::size_t>(id_value);
    if (id >= nn || seen[id]) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": id " + tok[0] +
                                             (id >= nn ? " out of range" : " repeated"));
    }
    seen[id] = 1;
    for (std::size_t c = 0; c < nk; ++c) {
      if (!parse_number(tok[c + 1], logits(id, c))) {
        throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": bad logit");
      }
    }
  }
  const auto gap = std::find(seen.begin(), seen.end(), 0);
  if (gap != seen.end()) {
    throw Error(ErrorCode::MissingExample, std::to_string(gap - seen.begin()));
  }
  return ReferenceTable(std::move(logits), tau, provenance);
}

void save_reference(const ReferenceTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  if (!table.provenance().empty()) out << "# provenance: " << table.provenance() << '\n';
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", table.temperature());
  out << "k=" << table.num_classes() << " n=" << table.size() << " tau=" << buf << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << i;
    for (double v : table.logits().row(i)) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

double ref_log_prob(const ReferenceTable& table, std::size_t id, std::size_t y) {
  if (id >= table.size() || y >= table.num_classes()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "reference query id=" + std::to_string(id) + " y=" + std::to_string(y));
  }
  const auto row = table.logits().row(id);
  const double inv_tau = 1.0 / table.temperature();
  Vector scaled(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) scaled[c] = row[c] * inv_tau;
  return scaled[y] - log_sum_exp(scaled);
}

double ref_accuracy(const ReferenceTable& table, const std::vector<std::size_t>& labels) {
  if (labels.size() != table.size()) {
    throw Error(ErrorCode::DimensionMismatch, "label vector does not match reference size");
  }
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += argmax(table.logits().row(i)) == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

ReferenceTable prototype_reference(const LabeledDataset& ds, double clean_fraction,
                                   double temperature, std::uint64_t seed,
                                   const std::string& provenance) {
  if (!(clean_fraction > 0.0 && clean_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidRate, "clean fraction must be in (0, 1]");
  }
  const std::size_t n = ds.size();
  const std::size_t dim = ds.input_dim();
  const std::size_t k = ds.num_classes;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto m = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(clean_fraction * static_cast<double>(n))));
  order.resize(std::min(m, n));

  Matrix means(k, dim);
  std::vector<std::size_t> counts(k, 0);
  Vector global(dim, 0.0);
  for (std::size_t i : order) {
    const std::size_t c = ds.clean_labels[i];
    ++counts[c];
    for (std::size_t j = 0; j < dim; ++j) {
      means(c, j) += ds.features(i, j);
      global[j] += ds.features(i, j);
    }
  }
  for (double& v : global) v /= static_cast<double>(order.size());
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < dim; ++j) {
      // Classes absent from the fitted subset fall back to the global mean.
      means(c, j) = counts[c] ? means(c, j) / static_cast<double>(counts[c]) : global[j];
    }
  }

  Matrix logits(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = ds.features(i, j) - means(c, j);
        d2 += diff * diff;
      }
      logits(i, c) = -0.5 * d2;
    }
  }
  return ReferenceTable(std::move(logits), temperature, provenance);
}

ReferenceTable reference_from_logits(const std::string& path, double temperature,
                                     const std::string& provenance) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<Vector> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Vector row;
    bool ok = true;
    for (std::string t; ss >> t;) {
      double v = 0;
      ok = ok && parse_number(t, v);
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (!ok) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::DimensionMismatch, path + ":" + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, path + ": no logits");
  return ReferenceTable(Matrix::from_rows(rows), temperature, provenance);
}

}  // namespace bsel
