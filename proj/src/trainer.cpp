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

#include "bsel/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsel/error.hpp"
#include "bsel/selection.hpp"

namespace bsel {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "bsel-checkpoint";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Sample> gather(const LabeledDataset& ds, std::span<const std::size_t> ids) {
  std::vector<Sample> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(ds.sample(id));
  return out;
}

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data() = j.at("data").get<std::vector<double>>();
  if (m.data().size() != m.rows() * m.cols()) {
    throw Error(ErrorCode::CorruptCheckpoint, "matrix payload size");
  }
  return m;
}

json network_to_json(const Network& net) {
  json layers = json::array();
  for (const DenseLayer& l : net.layers()) {
    layers.push_back({{"weight", matrix_to_json(l.weight)}, {"bias", l.bias}});
  }
  return {{"input_dim", net.input_dim()}, {"layers", layers}, {"head", matrix_to_json(net.head())}};
}

Network network_from_json(const json& j) {
  std::vector<DenseLayer> layers;
  for (const json& l : j.at("layers")) {
    layers.push_back({matrix_from_json(l.at("weight")), l.at("bias").get<Vector>()});
  }
  return Network(j.at("input_dim").get<std::size_t>(), std::move(layers),
                 matrix_from_json(j.at("head")));
}

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

std::mt19937_64 rng_from_string(const std::string& s) {
  std::mt19937_64 rng;
  std::istringstream ss(s);
  ss >> rng;
  if (!ss) throw Error(ErrorCode::CorruptCheckpoint, "selection RNG state");
  return rng;
}

LabeledDataset load_train_set(const TrainerConfig& c, LabeledDataset& test) {
  LabeledDataset train;
  if (c.data.source == "synthetic") {
    SyntheticData syn = gen_synthetic(c.data.classes, c.data.per_class, c.data.input_dim,
                                      c.data.separation, c.seeds.data, c.data.test_per_class);
    train = std::move(syn.train);
    test = std::move(syn.test);
  } else {
    train = load_dataset(c.data.train_path);
    test = load_dataset(c.data.test_path);
    test.split = Split::Test;
    if (test.num_classes != train.num_classes || test.input_dim() != train.input_dim()) {
      throw Error(ErrorCode::DimensionMismatch, "train and test files disagree on shape");
    }
  }
  if (c.data.subset_fraction < 1.0) train = take_fraction(train, c.data.subset_fraction, c.seeds.data);
  if (c.data.imbalance_ratio > 1.0) train = make_imbalanced(train, c.data.imbalance_ratio);
  if (c.data.noise_rate > 0.0) train = inject_symmetric_noise(train, c.data.noise_rate, c.seeds.noise);
  return train;
}

ReferenceTable make_predictor(const PredictorConfig& pc, const LabeledDataset& train,
                              std::uint64_t seed, const std::string& provenance) {
  if (!pc.path.empty()) {
    ReferenceTable t = load_reference(pc.path);
    t.require_covers(train.size(), train.num_classes);
    t.set_temperature(pc.temperature);
    return t;
  }
  return prototype_reference(train, pc.clean_fraction, pc.temperature, seed, provenance);
}

}  // namespace

std::vector<std::uint8_t> snapshot_correctness(const Network& net, const LabeledDataset& ds,
                                               std::span<const std::size_t> ids) {
  std::vector<std::uint8_t> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(argmax(logits(net, ds.features.row(id))) == ds.labels[id]);
  return out;
}

double test_accuracy(const Network& net, const LabeledDataset& ds) {
  if (ds.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    correct += argmax(logits(net, ds.features.row(i))) == ds.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

Trainer::Trainer(TrainerConfig config)
    : config_(std::move(config)),
      train_(load_train_set(config_, test_)),
      net_(init_network(train_.input_dim(), config_.model.hidden, config_.model.feature_dim, train_.num_classes,
                        config_.seeds.model)),
      opt_(make_optimizer(net_, config_.optimizer)),
      laplace_(init_laplace(config_.laplace.prior_precision, config_.laplace.effective_data,
                            net_.feature_dim(), net_.num_classes(), config_.laplace.ema_decay)),
      stream_(train_.size(), config_.candidate_batch, config_.seeds.data),
      selection_rng_(config_.seeds.selection) {
  if (config_.selected_batch > config_.candidate_batch) {
    throw Error(ErrorCode::ConfigError, "selection.n_b exceeds selection.n_B");
  }
  const Method m = config_.selector.method;
  if (m == Method::Bayesian) {
    reference_ = make_predictor(config_.reference, train_, splitmix64(config_.seeds.data ^ 0x5eed),
                                "prototype reference");
  }
  if (m == Method::Irreducible) {
    holdout_ = make_predictor(config_.holdout, train_, splitmix64(config_.seeds.data ^ 0x401d),
                              "holdout model");
  }
  total_steps_ = config_.steps > 0 ? config_.steps : config_.epochs * stream_.batches_per_epoch();
}

ScoreVector Trainer::score_candidates(const std::vector<std::size_t>& ids, const ForwardPass& fwd,
                                      StepTrace& trace) {
  ScoreVector sv;
  sv.method = config_.selector.method;
  sv.scores.assign(ids.size(), 0.0);
  switch (sv.method) {
    case Method::Bayesian: {
      const PosteriorSnapshot snapshot(laplace_);
      const std::uint64_t step_seed = selection_rng_();
      double min_gap = INFINITY;
      for (std::size_t j = 0; j < ids.size(); ++j) {
        const std::size_t y = train_.labels[ids[j]];
        const PredictiveGaussian pred = predictive(snapshot, fwd.features[j], fwd.logits[j]);
        const Matrix mc = sample_logits(pred, config_.selector.mc_samples, splitmix64(step_seed + j));
        const McLikelihood lik = mc_likelihood(y, mc);
        min_gap = std::min(min_gap, lik.log_mean_lik - lik.mean_log_lik);
        sv.scores[j] = score_bayesian(lik, ref_log_prob(*reference_, ids[j], y), config_.selector.alpha);
      }
      trace.min_jensen_gap = min_gap;
      break;
    }
    case Method::Uniform:
      break;
    case Method::TrainLoss:
      for (std::size_t j = 0; j < ids.size(); ++j) {
        sv.scores[j] = score_train_loss(train_.labels[ids[j]], fwd.logits[j]);
      }
      break;
    case Method::GradNorm:
    case Method::GradNormIS:
      for (std::size_t j = 0; j < ids.size(); ++j) {
        sv.scores[j] = score_grad_norm(train_.labels[ids[j]], fwd.logits[j], fwd.features[j]);
      }
      break;
    case Method::Irreducible:
      for (std::size_t j = 0; j < ids.size(); ++j) {
        const std::size_t y = train_.labels[ids[j]];
        sv.scores[j] = score_irreducible(y, fwd.logits[j], ref_log_prob(*holdout_, ids[j], y));
      }
      break;
  }
  return sv;
}

const StepTrace& Trainer::step() {
  if (finished()) throw Error(ErrorCode::ConfigError, "trainer already ran all steps");
  const BatchDraw draw = stream_.next_batch();
  StepTrace trace;
  trace.step = step_ + 1;
  trace.epoch = draw.epoch + 1;
  trace.candidates = draw.indices;

  const std::vector<Sample> candidates = gather(train_, trace.candidates);
  const ForwardPass fwd = forward_batch(net_, candidates);
  trace.correct_before.reserve(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    trace.correct_before.push_back(argmax(fwd.logits[j]) == candidates[j].y);
  }

  ScoreVector sv = score_candidates(trace.candidates, fwd, trace);
  if (sv.method == Method::GradNormIS) {
    ImportanceSample is = sample_grad_norm_is(sv.scores, config_.selected_batch, selection_rng_());
    trace.selected = std::move(is.indices);
    sv.weights = std::move(is.weights);
  } else {
    trace.selected = top_k(sv.scores, config_.selected_batch);
  }
  trace.scores = std::move(sv.scores);

  std::vector<Sample> chosen;
  std::vector<Vector> chosen_features;
  std::vector<Vector> chosen_grads;
  double loss = 0.0;
  for (std::size_t pos : trace.selected) {
    chosen.push_back(candidates[pos]);
    chosen_features.push_back(fwd.features[pos]);
    Vector g = softmax_ce_grad(fwd.logits[pos], candidates[pos].y);
    loss += score_train_loss(candidates[pos].y, fwd.logits[pos]);
    for (double& v : g) v = -v;  // gradient of log p(y|f)
    chosen_grads.push_back(std::move(g));
  }
  trace.train_loss = loss / static_cast<double>(chosen.size());

  const LossAndGrads lg = loss_and_grads(net_, chosen, sv.weights);
  optimizer_step(net_, opt_, lg.grads);
  update_curvature(laplace_, chosen_features, chosen_grads);

  tally_.loss_sum += trace.train_loss;
  ++tally_.steps;
  for (std::size_t pos : trace.selected) {
    ++tally_.selected;
    tally_.noisy += train_.noise_flags[trace.candidates[pos]];
    tally_.redundant += trace.correct_before[pos];
  }

  ++step_;
  trace_.push_back(std::move(trace));
  const StepTrace& done = trace_.back();
  if (draw.epoch_end && done.epoch % config_.eval_every_epochs == 0) {
    evaluate(done.epoch);
  } else if (finished() && tally_.steps > 0) {
    evaluate(done.epoch);
  }
  return done;
}

void Trainer::evaluate(std::size_t epoch) {
  EvalRecord r;
  r.step = step_;
  r.epoch = epoch;
  r.test_acc = test_accuracy(net_, test_);
  if (tally_.steps > 0) r.train_loss = tally_.loss_sum / static_cast<double>(tally_.steps);
  if (tally_.selected > 0) {
    r.noisy_frac_selected = static_cast<double>(tally_.noisy) / static_cast<double>(tally_.selected);
    r.redundant_frac_selected =
        static_cast<double>(tally_.redundant) / static_cast<double>(tally_.selected);
  }
  history_.push_back(r);
  tally_ = EpochTally{};
}

void Trainer::run() {
  while (!finished()) step();
}

void Trainer::save_checkpoint(const std::string& path) const {
  json payload;
  payload["config"] = config_to_json(config_);
  payload["step"] = step_;
  payload["stream"] = {{"epoch", stream_.epoch()}, {"position", stream_.position()}};
  payload["selection_rng"] = rng_to_string(selection_rng_);
  payload["network"] = network_to_json(net_);
  payload["optimizer"] = {{"step", opt_.step},
                          {"first_moment", opt_.first_moment},
                          {"second_moment", opt_.second_moment}};
  payload["laplace"] = {{"A", matrix_to_json(laplace_.feature_moment)},
                        {"G", matrix_to_json(laplace_.gradient_moment)},
                        {"tau0", laplace_.prior_precision},
                        {"n_e", laplace_.effective_data},
                        {"beta", laplace_.ema_decay},
                        {"updates", laplace_.updates}};
  payload["tally"] = {{"loss_sum", tally_.loss_sum},
                      {"steps", tally_.steps},
                      {"selected", tally_.selected},
                      {"noisy", tally_.noisy},
                      {"redundant", tally_.redundant}};
  json history = json::array();
  for (const EvalRecord& r : history_) history.push_back(json::parse(metrics_line(r)));
  payload["history"] = history;

  const std::string body = payload.dump();
  json doc = {{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"checksum", fnv1a_hex(body)},
              {"payload", payload}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << doc.dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

Trainer Trainer::restore(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("payload")) {
    throw Error(ErrorCode::CorruptCheckpoint, path + ": not a checkpoint document");
  }
  if (doc.value("format", "") != kCheckpointFormat) {
    throw Error(ErrorCode::CorruptCheckpoint, path + ": unknown format");
  }
  if (doc.value("version", -1) != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, path + ": checkpoint version " +
                                                doc.value("version", json(-1)).dump() +
                                                ", expected " + std::to_string(kCheckpointVersion));
  }
  const json& payload = doc.at("payload");
  if (doc.value("checksum", "") != fnv1a_hex(payload.dump())) {
    throw Error(ErrorCode::CorruptCheckpoint, path + ": checksum mismatch");
  }

  try {
    Trainer t(config_from_json(resolve_config(payload.at("config"))));
    t.step_ = payload.at("step").get<std::size_t>();
    const json& stream = payload.at("stream");
    t.stream_.seek(stream.at("epoch").get<std::size_t>(), stream.at("position").get<std::size_t>());
    t.selection_rng_ = rng_from_string(payload.at("selection_rng").get<std::string>());

    Network net = network_from_json(payload.at("network"));
    if (net.parameter_count() != t.net_.parameter_count()) {
      throw Error(ErrorCode::CorruptCheckpoint, "network shape differs from configuration");
    }
    t.net_ = std::move(net);
    const json& opt = payload.at("optimizer");
    t.opt_.step = opt.at("step").get<std::uint64_t>();
    t.opt_.first_moment = opt.at("first_moment").get<std::vector<Vector>>();
    t.opt_.second_moment = opt.at("second_moment").get<std::vector<Vector>>();

    const json& lap = payload.at("laplace");
    t.laplace_.feature_moment = matrix_from_json(lap.at("A"));
    t.laplace_.gradient_moment = matrix_from_json(lap.at("G"));
    t.laplace_.prior_precision = lap.at("tau0").get<double>();
    t.laplace_.effective_data = lap.at("n_e").get<double>();
    t.laplace_.ema_decay = lap.at("beta").get<double>();
    t.laplace_.updates = lap.at("updates").get<std::uint64_t>();

    const json& tally = payload.at("tally");
    t.tally_.loss_sum = tally.at("loss_sum").get<double>();
    t.tally_.steps = tally.at("steps").get<std::size_t>();
    t.tally_.selected = tally.at("selected").get<std::size_t>();
    t.tally_.noisy = tally.at("noisy").get<std::size_t>();
    t.tally_.redundant = tally.at("redundant").get<std::size_t>();

    for (const json& r : payload.at("history")) {
      t.history_.push_back({r.at("step").get<std::size_t>(), r.at("epoch").get<std::size_t>(),
                            r.at("test_acc").get<double>(), r.at("train_loss").get<double>(),
                            r.at("noisy_frac_selected").get<double>(),
                            r.at("redundant_frac_selected").get<double>()});
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, path + ": " + e.what());
  }
}

std::string metrics_line(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["epoch"] = r.epoch;
  j["test_acc"] = r.test_acc;
  j["train_loss"] = r.train_loss;
  j["noisy_frac_selected"] = r.noisy_frac_selected;
  j["redundant_frac_selected"] = r.redundant_frac_selected;
  return j.dump();
}

void write_trace_csv(const std::vector<StepTrace>& trace, const LabeledDataset& train,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "step,candidate_id,score,selected,correct_before,noisy\n";
  char buf[64];
  for (const StepTrace& st : trace) {
    std::vector<std::uint8_t> chosen(st.candidates.size(), 0);
    for (std::size_t pos : st.selected) chosen[pos] = 1;
    for (std::size_t j = 0; j < st.candidates.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", st.scores[j]);
      out << st.step << ',' << st.candidates[j] << ',' << buf << ',' << int(chosen[j]) << ','
          << int(st.correct_before[j]) << ',' << int(train.noise_flags[st.candidates[j]]) << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

RunResult run(const TrainerConfig& config, const nlohmann::json& resolved_config) {
  Trainer trainer(config);
  trainer.run();

  if (!config.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);
    {
      std::ofstream out(dir / "config.json");
      out << (resolved_config.is_null() ? config_to_json(config) : resolved_config).dump(2) << '\n';
    }
    {
      std::ofstream out(dir / "metrics.jsonl");
      for (const EvalRecord& r : trainer.history()) out << metrics_line(r) << '\n';
      if (!out) throw Error(ErrorCode::IoError, "write failed: metrics.jsonl");
    }
    if (config.write_trace) {
      write_trace_csv(trainer.trace(), trainer.train_set(), (dir / "trace.csv").string());
    }
    if (config.write_checkpoint) trainer.save_checkpoint((dir / "checkpoint.json").string());
  }
  return {trainer.network(), trainer.trace(), trainer.history(), trainer.steps_per_epoch()};
}

}  // namespace bsel
