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

// Command-line front end. Links only the C interface.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bsel/bsel.h"

namespace {

const char* status_name(bsel_status s) {
  switch (s) {
    case BSEL_OK: return "ok";
    case BSEL_CONFIG_ERROR: return "config error";
    case BSEL_DATA_ERROR: return "data error";
    case BSEL_NUMERICAL_ERROR: return "numerical failure";
    case BSEL_ORACLE_FAILURE: return "oracle failure";
    default: return "internal error";
  }
}

int fail(bsel_status s) {
  std::cerr << "bsel: " << status_name(s) << ": " << bsel_last_error() << '\n';
  return static_cast<int>(s);
}

std::vector<double> parse_targets(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument(item);
    out.push_back(v);
  }
  return out;
}

struct GenDataArgs {
  std::string kind = "synthetic";
  std::string out;
  std::string input;
  std::string format = "csv";
  std::size_t classes = 10;
  std::size_t per_class = 500;
  std::size_t test_per_class = 200;
  std::size_t dim = 20;
  double separation = 3.0;
  std::uint64_t seed = 2;
};

int gen_data(const GenDataArgs& a) {
  if (a.kind == "csv2bin") {
    if (a.input.empty()) {
      std::cerr << "bsel: config error: --input is required for csv2bin\n";
      return BSEL_CONFIG_ERROR;
    }
    bsel_dataset* ds = nullptr;
    bsel_status s = bsel_dataset_load(a.input.c_str(), a.classes, &ds);
    if (s != BSEL_OK) return fail(s);
    s = bsel_dataset_save(ds, a.out.c_str());
    bsel_dataset_free(ds);
    if (s != BSEL_OK) return fail(s);
    std::cout << "wrote " << a.out << '\n';
    return 0;
  }
  bsel_dataset* train = nullptr;
  bsel_dataset* test = nullptr;
  bsel_status s = bsel_dataset_synthetic(a.classes, a.per_class, a.test_per_class, a.dim,
                                         a.separation, a.seed, &train, &test);
  if (s != BSEL_OK) return fail(s);
  const std::string train_path = a.out + "/train." + a.format;
  const std::string test_path = a.out + "/test." + a.format;
  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  s = bsel_dataset_save(train, train_path.c_str());
  if (s == BSEL_OK) s = bsel_dataset_save(test, test_path.c_str());
  bsel_dataset_free(train);
  bsel_dataset_free(test);
  if (s != BSEL_OK) return fail(s);
  std::cout << "wrote " << train_path << " and " << test_path << '\n';
  return 0;
}

struct GenReferenceArgs {
  std::string dataset;
  std::string mode = "prototype";
  std::string logits;
  std::string out;
  double clean_frac = 0.1;
  double tau = 1.0;
  std::uint64_t seed = 7;
};

int gen_reference(const GenReferenceArgs& a) {
  bsel_reference* ref = nullptr;
  bsel_dataset* ds = nullptr;
  bsel_status s = BSEL_OK;
  if (!a.dataset.empty()) {
    s = bsel_dataset_load(a.dataset.c_str(), 0, &ds);
    if (s != BSEL_OK) return fail(s);
  }
  if (a.mode == "prototype") {
    if (ds == nullptr) {
      std::cerr << "bsel: config error: --dataset is required in prototype mode\n";
      return BSEL_CONFIG_ERROR;
    }
    s = bsel_reference_prototype(ds, a.clean_frac, a.tau, a.seed, &ref);
  } else {
    if (a.logits.empty()) {
      std::cerr << "bsel: config error: --logits is required in from-logits mode\n";
      bsel_dataset_free(ds);
      return BSEL_CONFIG_ERROR;
    }
    s = bsel_reference_from_logits(a.logits.c_str(), a.tau, &ref);
  }
  if (s == BSEL_OK) s = bsel_reference_save(ref, a.out.c_str());
  double acc = 0.0;
  if (s == BSEL_OK && ds != nullptr) s = bsel_reference_accuracy(ref, ds, &acc);
  bsel_reference_free(ref);
  bsel_dataset_free(ds);
  if (s != BSEL_OK) return fail(s);
  std::cout << "wrote " << a.out;
  if (!a.dataset.empty()) std::printf(" (accuracy on clean labels %.4f)", acc);
  std::cout << '\n';
  return 0;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string resume;
};

int train(const TrainArgs& a) {
  bsel_run* run = nullptr;
  bsel_status s;
  const char* out = a.out_dir.empty() ? nullptr : a.out_dir.c_str();
  if (!a.resume.empty()) {
    s = bsel_resume(a.resume.c_str(), out, &run);
  } else {
    std::vector<const char*> ov;
    for (const std::string& o : a.overrides) ov.push_back(o.c_str());
    s = bsel_train(a.config.empty() ? nullptr : a.config.c_str(), ov.data(), ov.size(), out, &run);
  }
  if (s != BSEL_OK) return fail(s);
  const std::size_t n = bsel_run_record_count(run);
  bsel_eval_record last{};
  if (n > 0) bsel_run_record(run, n - 1, &last);
  std::printf("steps %zu, evaluations %zu, final test accuracy %.4f\n", bsel_run_steps(run), n,
              last.test_acc);
  bsel_run_free(run);
  return 0;
}

int eval(const std::vector<std::string>& runs, const std::string& targets_text,
         const std::string& out) {
  std::vector<double> targets;
  try {
    targets = parse_targets(targets_text);
  } catch (const std::exception&) {
    std::cerr << "bsel: config error: --targets must be comma-separated numbers, got " << targets_text
              << '\n';
    return BSEL_CONFIG_ERROR;
  }
  std::vector<const char*> dirs;
  for (const std::string& r : runs) dirs.push_back(r.c_str());
  char* report = nullptr;
  const bsel_status s = bsel_eval(dirs.data(), dirs.size(), targets.data(), targets.size(),
                                  out.empty() ? nullptr : out.c_str(), &report);
  if (s != BSEL_OK) return fail(s);
  std::cout << report;
  bsel_string_free(report);
  return 0;
}

int check(const std::string& suite) {
  char* report = nullptr;
  const bsel_status s = bsel_check(suite.c_str(), &report);
  if (report != nullptr) {
    std::cout << report;
    bsel_string_free(report);
  }
  return s == BSEL_OK ? 0 : fail(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online batch selection with a last-layer Laplace posterior"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bsel_version());

  GenDataArgs gd;
  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic dataset or convert CSV to binary");
  gen->add_option("--kind", gd.kind)->check(CLI::IsMember({"synthetic", "csv2bin"}));
  gen->add_option("--out", gd.out, "Output directory (synthetic) or .bin file (csv2bin)")->required();
  gen->add_option("--input", gd.input, "CSV file to convert");
  gen->add_option("--format", gd.format)->check(CLI::IsMember({"csv", "bin"}));
  gen->add_option("--classes", gd.classes, "Class count (csv2bin: 0 infers)");
  gen->add_option("--per-class", gd.per_class);
  gen->add_option("--test-per-class", gd.test_per_class);
  gen->add_option("--dim", gd.dim);
  gen->add_option("--separation", gd.separation);
  gen->add_option("--seed", gd.seed);

  GenReferenceArgs gr;
  CLI::App* ref = app.add_subcommand("gen-reference", "Write a reference logit table");
  ref->add_option("--dataset", gr.dataset);
  ref->add_option("--mode", gr.mode)->check(CLI::IsMember({"prototype", "from-logits"}));
  ref->add_option("--logits", gr.logits, "CSV of logits, one row per example");
  ref->add_option("--clean-frac", gr.clean_frac);
  ref->add_option("--tau", gr.tau);
  ref->add_option("--seed", gr.seed);
  ref->add_option("--out", gr.out)->required();

  TrainArgs ta;
  CLI::App* tr = app.add_subcommand("train", "Run online batch selection training");
  tr->add_option("--config", ta.config, "JSON config; omitted keys take defaults");
  tr->add_option("--override", ta.overrides, "Dotted key=value, repeatable");
  tr->add_option("--out-dir", ta.out_dir, "Run directory (replaces output.dir)");
  tr->add_option("--resume", ta.resume, "Continue from a checkpoint.json");

  std::vector<std::string> runs;
  std::string targets;
  std::string report_dir = ".";
  CLI::App* ev = app.add_subcommand("eval", "Compare run directories");
  ev->add_option("--runs", runs, "Run directories, comma- or space-separated")->required()->delimiter(',');
  ev->add_option("--targets", targets, "Comma-separated accuracy targets")->required();
  ev->add_option("--out", report_dir, "Directory for report.txt and report.csv");

  std::string suite = "all";
  CLI::App* ck = app.add_subcommand("check", "Run the oracle suites");
  ck->add_option("--suite", suite)->check(CLI::IsMember({"bounds", "ggn", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return BSEL_CONFIG_ERROR;
  }

  if (gen->parsed()) return gen_data(gd);
  if (ref->parsed()) return gen_reference(gr);
  if (tr->parsed()) return train(ta);
  if (ev->parsed()) return eval(runs, targets, report_dir);
  return check(suite);
}
