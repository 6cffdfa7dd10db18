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

// The online batch selection loop. Each step draws a candidate batch B_t,
// scores every candidate at the current parameters, keeps the top n_b, takes
// one optimizer step on them and folds their last-layer features and output
// gradients into the Laplace curvature.

#ifndef BSEL_TRAINER_HPP_
#define BSEL_TRAINER_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bsel/config.hpp"
#include "bsel/data.hpp"
#include "bsel/model.hpp"
#include "bsel/posterior.hpp"
#include "bsel/reference.hpp"

namespace bsel {

/// One selection round.
struct StepTrace {
  std::size_t step = 0;   // 1-based
  std::size_t epoch = 0;  // 1-based epoch the step belongs to
  std::vector<std::size_t> candidates;
  std::vector<double> scores;
  std::vector<std::size_t> selected;  // positions into `candidates`, in selection order
  std::vector<std::uint8_t> correct_before;
  double train_loss = 0.0;
  /// Bayesian only: min over candidates of log-mean minus mean-log likelihood.
  std::optional<double> min_jensen_gap;
};

struct EvalRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double test_acc = 0.0;
  double train_loss = 0.0;
  double noisy_frac_selected = 0.0;
  double redundant_frac_selected = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

/// Argmax(logits) == label per candidate at the given parameters, ties to the lower class.
std::vector<std::uint8_t> snapshot_correctness(const Network& net, const LabeledDataset& ds,
                                               std::span<const std::size_t> ids);

double test_accuracy(const Network& net, const LabeledDataset& ds);

class Trainer {
 public:
  explicit Trainer(TrainerConfig config);

  /// Rebuilds the trainer from a checkpoint file. The datasets are
  /// regenerated from the embedded configuration.
  static Trainer restore(const std::string& path);

  const StepTrace& step();

  /// Runs to the configured number of steps (or epochs).
  void run();
  bool finished() const noexcept { return step_ >= total_steps_; }

  void save_checkpoint(const std::string& path) const;

  const TrainerConfig& config() const noexcept { return config_; }
  const Network& network() const noexcept { return net_; }
  const OptimizerState& optimizer() const noexcept { return opt_; }
  const LaplaceState& laplace() const noexcept { return laplace_; }
  const LabeledDataset& train_set() const noexcept { return train_; }
  const LabeledDataset& test_set() const noexcept { return test_; }
  const std::optional<ReferenceTable>& reference() const noexcept { return reference_; }
  const std::vector<StepTrace>& trace() const noexcept { return trace_; }
  const std::vector<EvalRecord>& history() const noexcept { return history_; }
  std::size_t steps_done() const noexcept { return step_; }
  std::size_t total_steps() const noexcept { return total_steps_; }
  std::size_t steps_per_epoch() const noexcept { return stream_.batches_per_epoch(); }

 private:
  struct EpochTally {
    double loss_sum = 0.0;
    std::size_t steps = 0;
    std::size_t selected = 0;
    std::size_t noisy = 0;
    std::size_t redundant = 0;
  };

  ScoreVector score_candidates(const std::vector<std::size_t>& ids, const ForwardPass& fwd,
                               StepTrace& trace);
  void evaluate(std::size_t epoch);

  TrainerConfig config_;
  LabeledDataset test_;  // filled while train_ is constructed, so declared first
  LabeledDataset train_;
  std::optional<ReferenceTable> reference_;
  std::optional<ReferenceTable> holdout_;
  Network net_;
  OptimizerState opt_;
  LaplaceState laplace_;
  BatchStream stream_;
  std::mt19937_64 selection_rng_;
  std::size_t step_ = 0;
  std::size_t total_steps_ = 0;
  EpochTally tally_;
  std::vector<StepTrace> trace_;
  std::vector<EvalRecord> history_;
};

struct RunResult {
  Network network;
  std::vector<StepTrace> trace;
  std::vector<EvalRecord> history;
  std::size_t steps_per_epoch = 0;
};

/// Runs a full training job. When `config.output_dir` is set, writes
/// config.json, metrics.jsonl, trace.csv and checkpoint.json there.
RunResult run(const TrainerConfig& config, const nlohmann::json& resolved_config = {});

std::string metrics_line(const EvalRecord& record);
void write_trace_csv(const std::vector<StepTrace>& trace, const LabeledDataset& train,
                     const std::string& path);

}  // namespace bsel

#endif  // BSEL_TRAINER_HPP_
