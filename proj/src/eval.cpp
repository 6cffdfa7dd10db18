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

#include "bsel/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "bsel/error.hpp"

namespace bsel {

namespace {

std::string digest(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FractionSeries per_epoch_fraction(const std::vector<TraceRow>& trace, std::size_t steps_per_epoch,
                                  bool (*hit)(const TraceRow&, const void*), const void* ctx) {
  if (steps_per_epoch == 0) throw Error(ErrorCode::InvalidHyperparameter, "steps_per_epoch is 0");
  std::vector<std::size_t> selected, hits;
  for (const TraceRow& r : trace) {
    if (!r.selected) continue;
    const std::size_t e = (r.step - 1) / steps_per_epoch;
    if (e >= selected.size()) {
      selected.resize(e + 1, 0);
      hits.resize(e + 1, 0);
    }
    ++selected[e];
    hits[e] += hit(r, ctx);
  }
  FractionSeries out;
  for (std::size_t e = 0; e < selected.size(); ++e) {
    if (selected[e] == 0) continue;
    out.per_epoch.push_back(static_cast<double>(hits[e]) / static_cast<double>(selected[e]));
  }
  if (!out.per_epoch.empty()) {
    out.mean = std::accumulate(out.per_epoch.begin(), out.per_epoch.end(), 0.0) /
               static_cast<double>(out.per_epoch.size());
  }
  return out;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * v);
  return buf;
}

std::string format_target(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  return buf;
}

}  // namespace

std::optional<std::size_t> epochs_to_target(const std::vector<EvalRecord>& history, double target) {
  for (const EvalRecord& r : history) {
    if (r.test_acc >= target) return r.epoch;
  }
  return std::nullopt;
}

std::optional<std::size_t> epochs_to_target(const std::vector<double>& accuracy, double target) {
  for (std::size_t i = 0; i < accuracy.size(); ++i) {
    if (accuracy[i] >= target) return i + 1;
  }
  return std::nullopt;
}

std::vector<TraceRow> flatten_trace(const std::vector<StepTrace>& trace,
                                    const std::vector<std::uint8_t>& noise_flags) {
  std::vector<TraceRow> rows;
  for (const StepTrace& st : trace) {
    std::vector<std::uint8_t> chosen(st.candidates.size(), 0);
    for (std::size_t pos : st.selected) chosen[pos] = 1;
    for (std::size_t j = 0; j < st.candidates.size(); ++j) {
      const std::size_t id = st.candidates[j];
      rows.push_back({st.step, id, st.scores[j], chosen[j] != 0, st.correct_before[j] != 0,
                      id < noise_flags.size() && noise_flags[id] != 0});
    }
  }
  return rows;
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("step,candidate_id,score,selected,correct_before,noisy", 0) != 0) {
    throw Error(ErrorCode::ParseError, path + ": unexpected trace header");
  }
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    unsigned long long step = 0, id = 0;
    double score = 0;
    int sel = 0, correct = 0, noisy = 0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%lf,%d,%d,%d", &step, &id, &score, &sel, &correct,
                    &noisy) != 6) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no));
    }
    rows.push_back({static_cast<std::size_t>(step), static_cast<std::size_t>(id), score, sel != 0,
                    correct != 0, noisy != 0});
  }
  return rows;
}

std::vector<EvalRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<EvalRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ParseError, path + ": bad metrics line");
    try {
      out.push_back({j.at("step").get<std::size_t>(), j.at("epoch").get<std::size_t>(),
                     j.at("test_acc").get<double>(), j.at("train_loss").get<double>(),
                     j.at("noisy_frac_selected").get<double>(),
                     j.at("redundant_frac_selected").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
  }
  return out;
}

FractionSeries noisy_fraction(const std::vector<TraceRow>& trace,
                              const std::vector<std::uint8_t>& noise_flags,
                              std::size_t steps_per_epoch) {
  return per_epoch_fraction(
      trace, steps_per_epoch,
      [](const TraceRow& r, const void* ctx) {
        const auto& flags = *static_cast<const std::vector<std::uint8_t>*>(ctx);
        if (r.candidate_id >= flags.size()) {
          throw Error(ErrorCode::IndexOutOfRange, "trace id beyond noise flags");
        }
        return flags[r.candidate_id] != 0;
      },
      &noise_flags);
}

FractionSeries redundant_fraction(const std::vector<TraceRow>& trace, std::size_t steps_per_epoch) {
  return per_epoch_fraction(
      trace, steps_per_epoch, [](const TraceRow& r, const void*) { return r.correct_before; },
      nullptr);
}

RunReport make_report(const std::string& label, const std::vector<EvalRecord>& history,
                      const std::vector<double>& targets, const std::string& config_digest) {
  RunReport r;
  r.label = label;
  r.targets = targets;
  for (double t : targets) r.epochs_to_target.push_back(epochs_to_target(history, t));
  if (!history.empty()) r.final_accuracy = history.back().test_acc;
  double noisy = 0.0, redundant = 0.0;
  for (const EvalRecord& e : history) {
    noisy += e.noisy_frac_selected;
    redundant += e.redundant_frac_selected;
  }
  if (!history.empty()) {
    r.mean_noisy_fraction = noisy / static_cast<double>(history.size());
    r.mean_redundant_fraction = redundant / static_cast<double>(history.size());
  }
  r.config_digest = config_digest;
  return r;
}

RunReport load_run_report(const std::string& run_dir, const std::vector<double>& targets) {
  namespace fs = std::filesystem;
  const fs::path dir(run_dir);
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) throw Error(ErrorCode::IoError, run_dir + ": missing config.json");
  std::stringstream ss;
  ss << cfg_in.rdbuf();
  const std::string cfg_text = ss.str();
  const auto cfg = nlohmann::json::parse(cfg_text, nullptr, false);
  if (cfg.is_discarded()) throw Error(ErrorCode::ParseError, run_dir + ": bad config.json");
  std::string label = cfg.value("/output/label"_json_pointer, std::string());
  if (label.empty()) label = cfg.value("/selection/method"_json_pointer, std::string("run"));

  const auto history = read_metrics((dir / "metrics.jsonl").string());
  return make_report(label, history, targets, digest(cfg_text));
}

ComparisonTable compare_runs(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::MismatchedTargets, "no runs to compare");
  const std::vector<double>& targets = reports.front().targets;
  for (const RunReport& r : reports) {
    if (r.targets != targets) {
      throw Error(ErrorCode::MismatchedTargets, "run '" + r.label + "' uses different targets");
    }
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunReport*>> groups;
  for (const RunReport& r : reports) {
    if (!groups.count(r.label)) order.push_back(r.label);
    groups[r.label].push_back(&r);
  }

  std::vector<std::vector<std::string>> cells;
  std::ostringstream csv;
  csv << "method,runs";
  for (double t : targets) csv << ",epochs_to_" << format_target(t);
  csv << ",final_acc,noisy_frac,redundant_frac\n";

  for (const std::string& label : order) {
    const auto& runs = groups[label];
    std::vector<std::string> row{label};
    csv << label << ',' << runs.size();
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      std::vector<std::size_t> reached;
      for (const RunReport* r : runs)
        if (r->epochs_to_target[ti]) reached.push_back(*r->epochs_to_target[ti]);
      if (reached.size() != runs.size()) {
        row.push_back("-");
        csv << ",";
        continue;
      }
      const double mean = std::accumulate(reached.begin(), reached.end(), 0.0) /
                          static_cast<double>(reached.size());
      const auto [lo, hi] = std::minmax_element(reached.begin(), reached.end());
      char buf[64];
      if (runs.size() == 1) {
        std::snprintf(buf, sizeof(buf), "%zu", reached.front());
      } else {
        std::snprintf(buf, sizeof(buf), "%.1f [%zu-%zu]", mean, *lo, *hi);
      }
      row.push_back(buf);
      std::snprintf(buf, sizeof(buf), "%.6g", mean);
      csv << ',' << buf;
    }
    double acc = 0, noisy = 0, redundant = 0;
    for (const RunReport* r : runs) {
      acc += r->final_accuracy;
      noisy += r->mean_noisy_fraction;
      redundant += r->mean_redundant_fraction;
    }
    const double n = static_cast<double>(runs.size());
    row.back() += " (" + percent(acc / n) + ")";
    char buf[96];
    std::snprintf(buf, sizeof(buf), ",%.6g,%.6g,%.6g\n", acc / n, noisy / n, redundant / n);
    csv << buf;
    cells.push_back(std::move(row));
  }

  std::vector<std::string> header{"Method"};
  for (double t : targets) header.push_back("Target " + percent(t));
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::ostringstream text;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      text << row[c] << std::string(width[c] - row[c].size() + 2, ' ');
    }
    text << '\n';
  };
  emit(header);
  for (const auto& row : cells) emit(row);
  text << "(final accuracy in parentheses; '-' = target not reached by every run)\n";
  return {text.str(), csv.str()};
}

std::string series_csv(const std::vector<std::string>& run_dirs) {
  std::ostringstream out;
  out << "run,label,epoch,step,test_acc,train_loss,noisy_frac,redundant_frac\n";
  for (const std::string& dir : run_dirs) {
    const RunReport report = load_run_report(dir, {});
    for (const EvalRecord& e : read_metrics((std::filesystem::path(dir) / "metrics.jsonl").string())) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), ",%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.step, e.test_acc,
                    e.train_loss, e.noisy_frac_selected, e.redundant_frac_selected);
      out << dir << ',' << report.label << buf;
    }
  }
  return out.str();
}

}  // namespace bsel
