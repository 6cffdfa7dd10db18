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

#include "bsel/bsel.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "bsel/config.hpp"
#include "bsel/data.hpp"
#include "bsel/error.hpp"
#include "bsel/eval.hpp"
#include "bsel/oracle.hpp"
#include "bsel/reference.hpp"
#include "bsel/trainer.hpp"

struct bsel_dataset {
  bsel::LabeledDataset ds;
};

struct bsel_reference {
  bsel::ReferenceTable table;
};

struct bsel_run {
  std::vector<bsel::EvalRecord> history;
  std::size_t steps = 0;
};

namespace {

thread_local std::string g_last_error;

bsel_status status_of(bsel::ErrorCode code) {
  switch (bsel::category_of(code)) {
    case bsel::ErrorCategory::Config: return BSEL_CONFIG_ERROR;
    case bsel::ErrorCategory::Data: return BSEL_DATA_ERROR;
    case bsel::ErrorCategory::Numerical: return BSEL_NUMERICAL_ERROR;
    case bsel::ErrorCategory::Oracle: return BSEL_ORACLE_FAILURE;
  }
  return BSEL_INTERNAL;
}

template <typename F>
bsel_status guarded(F&& body) {
  try {
    return body();
  } catch (const bsel::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("ConfigError: ") + e.what();
    return BSEL_CONFIG_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BSEL_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return BSEL_INTERNAL;
  }
}

bsel_status null_argument(const char* name) {
  g_last_error = std::string("null argument: ") + name;
  return BSEL_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bool ends_with(const std::string& s, const char* suffix) {
  const std::size_t n = std::strlen(suffix);
  return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

}  // namespace

extern "C" {

const char* bsel_last_error(void) { return g_last_error.c_str(); }

const char* bsel_version(void) { return "1.0.0"; }

void bsel_string_free(char* s) { std::free(s); }

bsel_status bsel_dataset_synthetic(size_t classes, size_t per_class, size_t test_per_class,
                                   size_t input_dim, double separation, uint64_t seed,
                                   bsel_dataset** train, bsel_dataset** test) {
  if (train == nullptr || test == nullptr) return null_argument("train/test");
  return guarded([&] {
    bsel::SyntheticData d =
        bsel::gen_synthetic(classes, per_class, input_dim, separation, seed, test_per_class);
    auto tr = std::make_unique<bsel_dataset>(bsel_dataset{std::move(d.train)});
    auto te = std::make_unique<bsel_dataset>(bsel_dataset{std::move(d.test)});
    *train = tr.release();
    *test = te.release();
    return BSEL_OK;
  });
}

bsel_status bsel_dataset_load(const char* path, size_t num_classes, bsel_dataset** out) {
  if (path == nullptr || out == nullptr) return null_argument("path/out");
  return guarded([&] {
    const std::string p(path);
    bsel::LabeledDataset ds = ends_with(p, ".bin") ? bsel::load_binary(p) : bsel::load_csv(p, num_classes);
    *out = new bsel_dataset{std::move(ds)};
    return BSEL_OK;
  });
}

bsel_status bsel_dataset_save(const bsel_dataset* ds, const char* path) {
  if (ds == nullptr || path == nullptr) return null_argument("ds/path");
  return guarded([&] {
    const std::string p(path);
    if (ends_with(p, ".bin")) {
      bsel::save_binary(ds->ds, p);
    } else {
      bsel::save_csv(ds->ds, p);
    }
    return BSEL_OK;
  });
}

bsel_status bsel_dataset_shape(const bsel_dataset* ds, size_t* size, size_t* input_dim,
                               size_t* num_classes) {
  if (ds == nullptr) return null_argument("ds");
  if (size != nullptr) *size = ds->ds.size();
  if (input_dim != nullptr) *input_dim = ds->ds.input_dim();
  if (num_classes != nullptr) *num_classes = ds->ds.num_classes;
  return BSEL_OK;
}

void bsel_dataset_free(bsel_dataset* ds) { delete ds; }

bsel_status bsel_reference_prototype(const bsel_dataset* ds, double clean_fraction,
                                     double temperature, uint64_t seed, bsel_reference** out) {
  if (ds == nullptr || out == nullptr) return null_argument("ds/out");
  return guarded([&] {
    const std::string provenance = "prototype clean_fraction=" + std::to_string(clean_fraction) +
                                   " seed=" + std::to_string(seed);
    *out = new bsel_reference{bsel::prototype_reference(ds->ds, clean_fraction, temperature, seed,
                                                        provenance)};
    return BSEL_OK;
  });
}

bsel_status bsel_reference_from_logits(const char* csv_path, double temperature,
                                       bsel_reference** out) {
  if (csv_path == nullptr || out == nullptr) return null_argument("csv_path/out");
  return guarded([&] {
    *out = new bsel_reference{
        bsel::reference_from_logits(csv_path, temperature, std::string("logits ") + csv_path)};
    return BSEL_OK;
  });
}

bsel_status bsel_reference_load(const char* path, bsel_reference** out) {
  if (path == nullptr || out == nullptr) return null_argument("path/out");
  return guarded([&] {
    *out = new bsel_reference{bsel::load_reference(path)};
    return BSEL_OK;
  });
}

bsel_status bsel_reference_save(const bsel_reference* ref, const char* path) {
  if (ref == nullptr || path == nullptr) return null_argument("ref/path");
  return guarded([&] {
    bsel::save_reference(ref->table, path);
    return BSEL_OK;
  });
}

bsel_status bsel_reference_accuracy(const bsel_reference* ref, const bsel_dataset* ds,
                                    double* accuracy) {
  if (ref == nullptr || ds == nullptr || accuracy == nullptr) return null_argument("ref/ds/accuracy");
  return guarded([&] {
    ref->table.require_covers(ds->ds.size(), ds->ds.num_classes);
    *accuracy = bsel::ref_accuracy(ref->table, ds->ds.clean_labels);
    return BSEL_OK;
  });
}

void bsel_reference_free(bsel_reference* ref) { delete ref; }

bsel_status bsel_train(const char* config_path, const char* const* overrides, size_t override_count,
                       const char* out_dir, bsel_run** out) {
  if (out == nullptr) return null_argument("out");
  if (override_count > 0 && overrides == nullptr) return null_argument("overrides");
  return guarded([&] {
    const nlohmann::json user =
        config_path != nullptr ? bsel::read_json_file(config_path) : nlohmann::json::object();
    std::vector<std::string> ov(overrides, overrides + override_count);
    if (out_dir != nullptr) ov.push_back("output.dir=" + nlohmann::json(out_dir).dump());
    const nlohmann::json resolved = bsel::resolve_config(user, ov);
    const bsel::TrainerConfig config = bsel::config_from_json(resolved);
    bsel::RunResult result = bsel::run(config, resolved);
    std::size_t steps = 0;
    if (!result.trace.empty()) steps = result.trace.back().step;
    *out = new bsel_run{std::move(result.history), steps};
    return BSEL_OK;
  });
}

bsel_status bsel_resume(const char* checkpoint_path, const char* out_dir, bsel_run** out) {
  if (checkpoint_path == nullptr || out == nullptr) return null_argument("checkpoint_path/out");
  return guarded([&] {
    bsel::Trainer trainer = bsel::Trainer::restore(checkpoint_path);
    trainer.run();
    if (out_dir != nullptr) {
      namespace fs = std::filesystem;
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      std::ofstream metrics(dir / "metrics.jsonl");
      for (const bsel::EvalRecord& r : trainer.history()) metrics << bsel::metrics_line(r) << '\n';
      std::ofstream config(dir / "config.json");
      config << bsel::config_to_json(trainer.config()).dump(2) << '\n';
      if (trainer.config().write_trace) {
        bsel::write_trace_csv(trainer.trace(), trainer.train_set(), (dir / "trace.csv").string());
      }
      trainer.save_checkpoint((dir / "checkpoint.json").string());
    }
    *out = new bsel_run{trainer.history(), trainer.steps_done()};
    return BSEL_OK;
  });
}

size_t bsel_run_record_count(const bsel_run* run) { return run == nullptr ? 0 : run->history.size(); }

bsel_status bsel_run_record(const bsel_run* run, size_t index, bsel_eval_record* out) {
  if (run == nullptr || out == nullptr) return null_argument("run/out");
  if (index >= run->history.size()) {
    g_last_error = "IndexOutOfRange: record " + std::to_string(index);
    return BSEL_NUMERICAL_ERROR;
  }
  const bsel::EvalRecord& r = run->history[index];
  *out = {r.step, r.epoch, r.test_acc, r.train_loss, r.noisy_frac_selected, r.redundant_frac_selected};
  return BSEL_OK;
}

size_t bsel_run_steps(const bsel_run* run) { return run == nullptr ? 0 : run->steps; }

void bsel_run_free(bsel_run* run) { delete run; }

bsel_status bsel_eval(const char* const* run_dirs, size_t run_count, const double* targets,
                      size_t target_count, const char* out_dir, char** report) {
  if (run_dirs == nullptr || targets == nullptr || report == nullptr) {
    return null_argument("run_dirs/targets/report");
  }
  return guarded([&] {
    const std::vector<double> t(targets, targets + target_count);
    std::vector<bsel::RunReport> reports;
    for (std::size_t i = 0; i < run_count; ++i) reports.push_back(bsel::load_run_report(run_dirs[i], t));
    const bsel::ComparisonTable table = bsel::compare_runs(reports);
    if (out_dir != nullptr) {
      namespace fs = std::filesystem;
      fs::create_directories(out_dir);
      std::ofstream(fs::path(out_dir) / "report.txt") << table.text;
      std::ofstream(fs::path(out_dir) / "report.csv") << table.csv;
      std::vector<std::string> dirs(run_dirs, run_dirs + run_count);
      std::ofstream(fs::path(out_dir) / "series.csv") << bsel::series_csv(dirs);
    }
    *report = dup_string(table.text);
    return BSEL_OK;
  });
}

bsel_status bsel_check(const char* suite, char** report) {
  if (suite == nullptr || report == nullptr) return null_argument("suite/report");
  return guarded([&] {
    const std::string s(suite);
    if (s != "bounds" && s != "ggn" && s != "all") {
      throw bsel::Error(bsel::ErrorCode::ConfigError, "suite: expected bounds, ggn or all, got " + s);
    }
    std::string text;
    bool ok = true;
    if (s == "bounds" || s == "all") {
      const bsel::oracle::SuiteReport r = bsel::oracle::run_bounds_suite();
      text += "[bounds]\n" + r.text();
      ok = ok && r.passed();
    }
    if (s == "ggn" || s == "all") {
      const bsel::oracle::SuiteReport r = bsel::oracle::run_ggn_suite();
      text += "[ggn]\n" + r.text();
      ok = ok && r.passed();
    }
    *report = dup_string(text);
    if (!ok) {
      g_last_error = "oracle suite reported failures";
      return BSEL_ORACLE_FAILURE;
    }
    return BSEL_OK;
  });
}

}  // extern "C"
