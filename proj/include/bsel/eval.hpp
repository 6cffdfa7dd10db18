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

#ifndef BSEL_EVAL_HPP_
#define BSEL_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bsel/trainer.hpp"

namespace bsel {

/// First 1-based evaluation epoch whose test accuracy reaches `target`.
std::optional<std::size_t> epochs_to_target(const std::vector<EvalRecord>& history, double target);
std::optional<std::size_t> epochs_to_target(const std::vector<double>& accuracy, double target);

/// One row of trace.csv.
struct TraceRow {
  std::size_t step = 0;
  std::size_t candidate_id = 0;
  double score = 0.0;
  bool selected = false;
  bool correct_before = false;
  bool noisy = false;
};

std::vector<TraceRow> flatten_trace(const std::vector<StepTrace>& trace,
                                    const std::vector<std::uint8_t>& noise_flags);
std::vector<TraceRow> read_trace_csv(const std::string& path);
std::vector<EvalRecord> read_metrics(const std::string& path);

struct FractionSeries {
  std::vector<double> per_epoch;
  double mean = 0.0;
};

/// Per epoch, the share of selected rows whose example carries a noise flag.
/// Steps map to epochs as (step - 1) / steps_per_epoch.
FractionSeries noisy_fraction(const std::vector<TraceRow>& trace,
                              const std::vector<std::uint8_t>& noise_flags,
                              std::size_t steps_per_epoch);

/// Per epoch, the share of selected rows already classified correctly.
FractionSeries redundant_fraction(const std::vector<TraceRow>& trace, std::size_t steps_per_epoch);

struct RunReport {
  std::string label;
  std::vector<double> targets;
  std::vector<std::optional<std::size_t>> epochs_to_target;
  double final_accuracy = 0.0;
  double mean_noisy_fraction = 0.0;
  double mean_redundant_fraction = 0.0;
  std::string config_digest;
};

RunReport make_report(const std::string& label, const std::vector<EvalRecord>& history,
                      const std::vector<double>& targets, const std::string& config_digest = "");

/// Builds a report from a run directory written by `run`.
RunReport load_run_report(const std::string& run_dir, const std::vector<double>& targets);

struct ComparisonTable {
  std::string text;
  std::string csv;
};

/// Rows are labels (seeds of one label are averaged, min/max shown), columns
/// are targets, cells hold epochs or "-", final accuracy in parentheses.
ComparisonTable compare_runs(const std::vector<RunReport>& reports);

/// Long-format per-evaluation series of every run directory, one CSV row per
/// (run, evaluation): run,label,epoch,step,test_acc,train_loss,noisy_frac,redundant_frac.
std::string series_csv(const std::vector<std::string>& run_dirs);

}  // namespace bsel

#endif  // BSEL_EVAL_HPP_
