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

#include "bsel/config.hpp"

#include <cmath>
#include <fstream>

#include "bsel/error.hpp"

namespace bsel {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, key + ": " + what);
}

const char* type_name(const json& v) { return v.type_name(); }

// Checks that `value` may replace `like` and returns it in the default's type.
json coerce(const std::string& key, const json& like, const json& value) {
  if (like.is_number_unsigned() || like.is_number_integer()) {
    if (value.is_number_unsigned() || value.is_number_integer()) {
      if (like.is_number_unsigned() && value.is_number_integer() && value.get<long long>() < 0) {
        config_error(key, "expected a non-negative integer");
      }
      return value;
    }
    if (value.is_number_float()) {
      const double v = value.get<double>();
      if (v == std::floor(v) && v >= 0) return json(static_cast<std::uint64_t>(v));
    }
    config_error(key, std::string("expected integer, got ") + type_name(value));
  }
  if (like.is_number_float()) {
    if (value.is_number()) return json(value.get<double>());
    config_error(key, std::string("expected number, got ") + type_name(value));
  }
  if (like.type() != value.type()) {
    config_error(key, std::string("expected ") + type_name(like) + ", got " + type_name(value));
  }
  return value;
}

void merge_into(json& base, const json& user, const std::string& prefix) {
  if (!user.is_object()) config_error(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) config_error(key, "unknown key");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_into(slot, it.value(), key);
    } else {
      slot = coerce(key, slot, it.value());
    }
  }
}

void apply_override(json& config, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    config_error(text, "override must look like key.path=value");
  }
  const std::string path = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &config;
  std::string walked;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    walked += (walked.empty() ? "" : ".") + part;
    if (!node->is_object() || !node->contains(part)) config_error(walked, "unknown key");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) {
    merge_into(*node, value, path);
  } else {
    *node = coerce(path, *node, value);
  }
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string(section) + "." + key, e.what());
  }
}

}  // namespace

json config_to_json(const TrainerConfig& c) {
  json j;
  j["seeds"] = {{"model", c.seeds.model},
                {"data", c.seeds.data},
                {"noise", c.seeds.noise},
                {"selection", c.seeds.selection}};
  j["data"] = {{"source", c.data.source},
               {"train_path", c.data.train_path},
               {"test_path", c.data.test_path},
               {"classes", c.data.classes},
               {"per_class", c.data.per_class},
               {"test_per_class", c.data.test_per_class},
               {"input_dim", c.data.input_dim},
               {"separation", c.data.separation},
               {"noise_rate", c.data.noise_rate},
               {"imbalance_ratio", c.data.imbalance_ratio},
               {"subset_fraction", c.data.subset_fraction}};
  j["model"] = {{"hidden", c.model.hidden}, {"feature_dim", c.model.feature_dim}};
  j["optimizer"] = {{"lr", c.optimizer.lr},
                    {"weight_decay", c.optimizer.weight_decay},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps}};
  j["selection"] = {{"method", to_string(c.selector.method)},
                    {"alpha", c.selector.alpha},
                    {"mc_samples", c.selector.mc_samples},
                    {"n_B", c.candidate_batch},
                    {"n_b", c.selected_batch}};
  j["laplace"] = {{"tau0", c.laplace.prior_precision},
                  {"n_e", c.laplace.effective_data},
                  {"beta", c.laplace.ema_decay}};
  j["reference"] = {{"path", c.reference.path},
                    {"tau", c.reference.temperature},
                    {"clean_fraction", c.reference.clean_fraction}};
  j["holdout"] = {{"path", c.holdout.path},
                  {"tau", c.holdout.temperature},
                  {"clean_fraction", c.holdout.clean_fraction}};
  j["train"] = {{"epochs", c.epochs}, {"steps", c.steps}, {"eval_every_epochs", c.eval_every_epochs}};
  j["output"] = {{"dir", c.output_dir},
                 {"trace", c.write_trace},
                 {"checkpoint", c.write_checkpoint},
                 {"label", c.label}};
  return j;
}

json default_config_json() { return config_to_json(TrainerConfig{}); }

json resolve_config(const json& user, const std::vector<std::string>& overrides) {
  json config = default_config_json();
  if (!user.is_null()) merge_into(config, user, "");
  for (const std::string& o : overrides) apply_override(config, o);
  return config;
}

TrainerConfig config_from_json(const json& j) {
  TrainerConfig c;
  c.seeds.model = get<std::uint64_t>(j, "seeds", "model");
  c.seeds.data = get<std::uint64_t>(j, "seeds", "data");
  c.seeds.noise = get<std::uint64_t>(j, "seeds", "noise");
  c.seeds.selection = get<std::uint64_t>(j, "seeds", "selection");

  c.data.source = get<std::string>(j, "data", "source");
  c.data.train_path = get<std::string>(j, "data", "train_path");
  c.data.test_path = get<std::string>(j, "data", "test_path");
  c.data.classes = get<std::size_t>(j, "data", "classes");
  c.data.per_class = get<std::size_t>(j, "data", "per_class");
  c.data.test_per_class = get<std::size_t>(j, "data", "test_per_class");
  c.data.input_dim = get<std::size_t>(j, "data", "input_dim");
  c.data.separation = get<double>(j, "data", "separation");
  c.data.noise_rate = get<double>(j, "data", "noise_rate");
  c.data.imbalance_ratio = get<double>(j, "data", "imbalance_ratio");
  c.data.subset_fraction = get<double>(j, "data", "subset_fraction");

  c.model.hidden = get<std::vector<std::size_t>>(j, "model", "hidden");
  c.model.feature_dim = get<std::size_t>(j, "model", "feature_dim");

  c.optimizer.lr = get<double>(j, "optimizer", "lr");
  c.optimizer.weight_decay = get<double>(j, "optimizer", "weight_decay");
  c.optimizer.beta1 = get<double>(j, "optimizer", "beta1");
  c.optimizer.beta2 = get<double>(j, "optimizer", "beta2");
  c.optimizer.eps = get<double>(j, "optimizer", "eps");

  c.selector.method = parse_method(get<std::string>(j, "selection", "method"));
  c.selector.alpha = get<double>(j, "selection", "alpha");
  c.selector.mc_samples = get<std::size_t>(j, "selection", "mc_samples");
  c.selector.seed = c.seeds.selection;
  c.candidate_batch = get<std::size_t>(j, "selection", "n_B");
  c.selected_batch = get<std::size_t>(j, "selection", "n_b");

  c.laplace.prior_precision = get<double>(j, "laplace", "tau0");
  c.laplace.effective_data = get<double>(j, "laplace", "n_e");
  c.laplace.ema_decay = get<double>(j, "laplace", "beta");

  c.reference.path = get<std::string>(j, "reference", "path");
  c.reference.temperature = get<double>(j, "reference", "tau");
  c.reference.clean_fraction = get<double>(j, "reference", "clean_fraction");
  c.holdout.path = get<std::string>(j, "holdout", "path");
  c.holdout.temperature = get<double>(j, "holdout", "tau");
  c.holdout.clean_fraction = get<double>(j, "holdout", "clean_fraction");

  c.epochs = get<std::size_t>(j, "train", "epochs");
  c.steps = get<std::size_t>(j, "train", "steps");
  c.eval_every_epochs = get<std::size_t>(j, "train", "eval_every_epochs");

  c.output_dir = get<std::string>(j, "output", "dir");
  c.write_trace = get<bool>(j, "output", "trace");
  c.write_checkpoint = get<bool>(j, "output", "checkpoint");
  c.label = get<std::string>(j, "output", "label");

  if (c.selected_batch == 0) config_error("selection.n_b", "must be positive");
  if (c.selected_batch > c.candidate_batch) {
    config_error("selection.n_b", "n_b = " + std::to_string(c.selected_batch) +
                                      " exceeds n_B = " + std::to_string(c.candidate_batch));
  }
  if (!(c.selector.alpha >= 0.0 && c.selector.alpha <= 1.0)) {
    config_error("selection.alpha", "must be in [0, 1]");
  }
  if (c.selector.mc_samples == 0) config_error("selection.mc_samples", "must be >= 1");
  if (c.data.source != "synthetic" && c.data.source != "files") {
    config_error("data.source", "must be 'synthetic' or 'files'");
  }
  if (c.data.source == "files" && (c.data.train_path.empty() || c.data.test_path.empty())) {
    config_error("data.train_path", "file datasets need data.train_path and data.test_path");
  }
  if (c.epochs == 0 && c.steps == 0) config_error("train.epochs", "either epochs or steps must be > 0");
  if (c.eval_every_epochs == 0) config_error("train.eval_every_epochs", "must be >= 1");
  if (!(c.laplace.prior_precision > 0.0)) config_error("laplace.tau0", "must be > 0");
  if (!(c.laplace.effective_data > 0.0)) config_error("laplace.n_e", "must be > 0");
  if (!(c.laplace.ema_decay >= 0.0 && c.laplace.ema_decay < 1.0)) {
    config_error("laplace.beta", "must be in [0, 1)");
  }
  if (!(c.reference.temperature > 0.0)) config_error("reference.tau", "must be > 0");
  if (!(c.holdout.temperature > 0.0)) config_error("holdout.tau", "must be > 0");
  if (!(c.optimizer.lr > 0.0)) config_error("optimizer.lr", "must be > 0");
  if (c.label.empty()) c.label = to_string(c.selector.method);
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigError, path + ": not valid JSON");
  return j;
}

}  // namespace bsel
