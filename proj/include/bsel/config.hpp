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

#ifndef BSEL_CONFIG_HPP_
#define BSEL_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "bsel/model.hpp"
#include "bsel/selection.hpp"

namespace bsel {

struct Seeds {
  std::uint64_t model = 1;
  std::uint64_t data = 2;
  std::uint64_t noise = 3;
  std::uint64_t selection = 4;
};

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "files"
  std::string train_path;
  std::string test_path;
  std::size_t classes = 10;
  std::size_t per_class = 500;
  std::size_t test_per_class = 200;
  std::size_t input_dim = 20;
  double separation = 3.0;
  double noise_rate = 0.0;
  double imbalance_ratio = 1.0;
  double subset_fraction = 1.0;
};

struct ModelConfig {
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t feature_dim = 32;
};

struct LaplaceConfig {
  double prior_precision = 1.0;
  double effective_data = 500.0;
  double ema_decay = 0.99;
};

/// A reference or holdout predictor: a table file, or (empty path) a
/// nearest-class-mean prototype fitted in-process on `clean_fraction` of the
/// training set.
struct PredictorConfig {
  std::string path;
  double temperature = 1.0;
  double clean_fraction = 0.1;
};

struct TrainerConfig {
  Seeds seeds;
  DataConfig data;
  ModelConfig model;
  AdamWConfig optimizer;
  SelectorConfig selector;
  std::size_t candidate_batch = 320;  // n_B
  std::size_t selected_batch = 32;    // n_b
  LaplaceConfig laplace;
  PredictorConfig reference;
  PredictorConfig holdout;
  std::size_t epochs = 50;
  std::size_t steps = 0;  // when > 0, run exactly this many steps instead of epochs
  std::size_t eval_every_epochs = 1;
  std::string output_dir;
  bool write_trace = true;
  bool write_checkpoint = true;
  std::string label;  // row name in comparison tables; defaults to the method
};

/// The full default configuration as JSON.
nlohmann::json default_config_json();

/// Defaults, deep-merged with `user` and then the `key.path=value` overrides.
/// Unknown keys and type mismatches raise ConfigError naming the key.
nlohmann::json resolve_config(const nlohmann::json& user,
                              const std::vector<std::string>& overrides = {});

/// Typed view of a resolved configuration, validated.
TrainerConfig config_from_json(const nlohmann::json& resolved);
nlohmann::json config_to_json(const TrainerConfig& config);

nlohmann::json read_json_file(const std::string& path);

}  // namespace bsel

#endif  // BSEL_CONFIG_HPP_
