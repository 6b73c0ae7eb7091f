// Copyright 2026 The flicc-workbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flicc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <new>
#include <numeric>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "flicc/error.hpp"
#include "flicc/loss.hpp"
#include "flicc/random.hpp"
#include "flicc/tokenizer.hpp"

namespace flicc::training {
namespace {

using json = nlohmann::json;

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string_view loss_name(LossKind kind) {
  return kind == LossKind::kFocal ? "focal" : "cross_entropy";
}

LossKind parse_loss(const std::string& name) {
  if (name == "focal") return LossKind::kFocal;
  if (name == "cross_entropy") return LossKind::kCrossEntropy;
  throw Error(ErrorCode::kParseError, "unknown loss '" + name + "'");
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : node) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return out;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  if (node.Tag() == "!") return node.as<std::string>();  // quoted scalar
  long long i;
  if (YAML::convert<long long>::decode(node, i)) return i;
  double d;
  if (YAML::convert<double>::decode(node, d)) return d;
  bool b;
  if (YAML::convert<bool>::decode(node, b)) return b;
  return node.as<std::string>();
}

json parse_yaml(const std::string& text) {
  try {
    return yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kParseError, std::string("YAML: ") + e.what());
  }
}

std::vector<std::vector<int>> tokenize(const SequenceClassifier& model, const Dataset& data) {
  const auto tokenizer = model.tokenizer();
  std::vector<std::vector<int>> out;
  out.reserve(data.size());
  for (const auto& s : data.samples) out.push_back(tokenizer.encode(s.text));
  return out;
}

std::size_t argmax(const Eigen::VectorXd& v) {
  std::size_t best = 0;
  for (long i = 1; i < v.size(); ++i) {
    if (v[i] > v[static_cast<long>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

std::string model_version(const TrainConfig& config, std::size_t best_epoch, double f1) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%012llx",
                static_cast<unsigned long long>(
                    fnv1a64(config.to_json().dump() + '#' + std::to_string(best_epoch) + '#' +
                            number(f1)) &
                    0xffffffffffffULL));
  return config.checkpoint_id.substr(config.checkpoint_id.find_last_of('/') + 1) + "-" + buf;
}

RunResult train_impl(const TrainConfig& config, const Dataset& train, const Dataset& val,
                     const FineTuneOptions& options, SequenceClassifier* model_out) {
  validate(config);
  if (train.samples.empty()) throw Error(ErrorCode::kEmptyInput, "training split is empty");
  if (val.samples.empty()) throw Error(ErrorCode::kEmptyInput, "validation split is empty");

  SequenceClassifier model = instantiate_checkpoint(config);
  if (config.lora) {
    if (!model.supports_lora()) {
      throw Error(ErrorCode::kUnsupportedCheckpoint,
                  config.checkpoint_id + " has no attention projections to adapt");
    }
    model.attach_lora(*config.lora, config.seed ^ 0x10a4ULL);
  }

  const auto train_ids = tokenize(model, train);
  const auto val_ids = tokenize(model, val);
  std::vector<Label> val_truth;
  for (const auto& s : val.samples) val_truth.push_back(s.label);

  auto& params = model.parameters();
  AdamW optimizer(params, {.weight_decay = config.weight_decay});
  const double gamma = config.effective_gamma();
  const std::size_t steps_per_epoch = (train.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.max_epochs;
  Rng rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Eigen::MatrixXd> best_weights;
  std::size_t step = 0;

  std::optional<std::ofstream> history_file;
  if (options.run_dir) {
    std::filesystem::create_directories(*options.run_dir);
    std::ofstream(*options.run_dir / "config.yaml") << config.to_yaml();
    history_file.emplace(*options.run_dir / "history.jsonl");
  }

  auto run_epoch = [&](std::size_t epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < train.size(); b += config.batch_size) {
      const std::size_t end = std::min(train.size(), b + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - b);
      model.zero_grad();
      for (std::size_t k = b; k < end; ++k) {
        const std::size_t i = order[k];
        const auto cache = model.forward(train_ids[i]);
        const auto lg = focal_loss_from_logits(cache.logits, train.samples[i].label.index(), gamma);
        if (!std::isfinite(lg.loss)) {
          throw Error(ErrorCode::kDivergedLoss,
                      "non-finite loss at epoch " + std::to_string(epoch) + "; lower the learning rate");
        }
        loss_sum += lg.loss;
        model.backward(cache, lg.grad * scale);
      }
      const double norm = clip_grad_norm(params, config.clip_norm);
      if (!std::isfinite(norm)) {
        throw Error(ErrorCode::kDivergedLoss,
                    "non-finite gradient at epoch " + std::to_string(epoch) + "; lower the learning rate");
      }
      optimizer.step(linear_schedule(config.learning_rate, step++, total_steps));
    }
    std::vector<Label> preds;
    preds.reserve(val_ids.size());
    for (const auto& ids : val_ids) preds.push_back(Label::from_index(argmax(model.logits(ids))));
    const auto rep = metrics::report(val_truth, preds);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(train.size()), rep.macro.f1, rep.accuracy,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    if (history_file) *history_file << rec.to_json().dump() << '\n' << std::flush;
    if (options.on_epoch) options.on_epoch(rec);
    return rec;
  };
  auto on_best = [&](const EpochRecord&) {
    best_weights.clear();
    for (const auto& p : params) best_weights.push_back(p.value);
  };

  EpochLoopResult loop;
  try {
    loop = run_epoch_loop(config.max_epochs, config.patience, run_epoch, on_best);
  } catch (const std::bad_alloc&) {
    throw Error(ErrorCode::kOutOfMemory,
                "allocation failed with batch_size " + std::to_string(config.batch_size) +
                    "; retry with a smaller batch_size or a smaller checkpoint");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = best_weights[i];

  RunResult result;
  result.config = config;
  result.history = std::move(loop.history);
  result.best_epoch = loop.best_epoch;
  result.best_val_f1_macro = loop.best_val_f1_macro;
  result.trainable_parameters = model.trainable_parameter_count();
  result.total_parameters = model.parameter_count();
  if (options.run_dir) {
    const auto dir = *options.run_dir / "model";
    json meta = {{"model_version", model_version(config, result.best_epoch, result.best_val_f1_macro)},
                 {"checkpoint_id", config.checkpoint_id},
                 {"best_epoch", result.best_epoch},
                 {"best_val_f1_macro", result.best_val_f1_macro},
                 {"labels", json::array()},
                 {"train_config", config.to_json()}};
    for (const auto& l : all_labels()) meta["labels"].push_back(std::string(l.name()));
    model.save(dir, meta);
    result.model_artifact = dir;
  }
  if (model_out) *model_out = std::move(model);
  return result;
}

}  // namespace

json TrainConfig::to_json() const {
  return {{"checkpoint_id", checkpoint_id},
          {"learning_rate", learning_rate},
          {"loss", loss_name(loss)},
          {"gamma", gamma},
          {"weight_decay", weight_decay},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"seed", seed},
          {"lora", lora ? json{{"rank", lora->rank}, {"alpha", lora->alpha}} : json(nullptr)},
          {"clip_norm", clip_norm}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "train config must be a mapping");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "checkpoint_id" || key == "checkpoint") {
        c.checkpoint_id = value.get<std::string>();
      } else if (key == "learning_rate") {
        c.learning_rate = value.get<double>();
      } else if (key == "loss") {
        if (value.is_object()) {
          c.loss = parse_loss(value.at("type").get<std::string>());
          if (value.contains("gamma")) c.gamma = value["gamma"].get<double>();
        } else {
          c.loss = parse_loss(value.get<std::string>());
        }
      } else if (key == "gamma") {
        c.gamma = value.get<double>();
      } else if (key == "weight_decay") {
        c.weight_decay = value.get<double>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<std::size_t>();
      } else if (key == "max_epochs") {
        c.max_epochs = value.get<std::size_t>();
      } else if (key == "patience") {
        c.patience = value.get<std::size_t>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "clip_norm") {
        c.clip_norm = value.get<double>();
      } else if (key == "lora") {
        if (!value.is_null()) {
          c.lora = LoraConfig{value.at("rank").get<std::size_t>(), value.at("alpha").get<double>()};
        }
      } else {
        throw Error(ErrorCode::kParseError, "unknown train config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("train config: ") + e.what());
  }
  return c;
}

std::string TrainConfig::to_yaml() const {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "checkpoint_id" << YAML::Value << checkpoint_id;
  out << YAML::Key << "learning_rate" << YAML::Value << number(learning_rate);
  out << YAML::Key << "loss" << YAML::Value << std::string(loss_name(loss));
  out << YAML::Key << "gamma" << YAML::Value << number(gamma);
  out << YAML::Key << "weight_decay" << YAML::Value << number(weight_decay);
  out << YAML::Key << "batch_size" << YAML::Value << batch_size;
  out << YAML::Key << "max_epochs" << YAML::Value << max_epochs;
  out << YAML::Key << "patience" << YAML::Value << patience;
  out << YAML::Key << "seed" << YAML::Value << seed;
  out << YAML::Key << "clip_norm" << YAML::Value << number(clip_norm);
  if (lora) {
    out << YAML::Key << "lora" << YAML::Value << YAML::BeginMap << YAML::Key << "rank"
        << YAML::Value << lora->rank << YAML::Key << "alpha" << YAML::Value
        << number(lora->alpha) << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string TrainConfig::run_name() const {
  std::string name = "lr" + number(learning_rate);
  if (loss == LossKind::kFocal) name += "_focal" + number(gamma);
  if (weight_decay > 0) name += "_wd" + number(weight_decay);
  if (lora) name += "_lora" + std::to_string(lora->rank) + "x" + number(lora->alpha);
  return name;
}

void validate(const TrainConfig& c) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (c.checkpoint_id.empty()) bad("checkpoint_id is empty");
  if (!(c.learning_rate > 0) || !std::isfinite(c.learning_rate)) bad("learning_rate must be positive");
  if (!(c.gamma >= 0) || !std::isfinite(c.gamma)) bad("gamma must be >= 0");
  if (!(c.weight_decay >= 0) || !std::isfinite(c.weight_decay)) bad("weight_decay must be >= 0");
  if (c.batch_size == 0) bad("batch_size must be positive");
  if (c.max_epochs == 0) bad("max_epochs must be positive");
  if (!(c.clip_norm > 0)) bad("clip_norm must be positive");
  if (c.lora && (c.lora->rank == 0 || !(c.lora->alpha > 0))) bad("lora rank and alpha must be positive");
}

std::vector<std::string> paper_protocol_violations(const TrainConfig& c) {
  std::vector<std::string> out;
  auto in = [](double v, std::initializer_list<double> set) {
    return std::any_of(set.begin(), set.end(),
                       [&](double s) { return std::abs(v - s) <= 1e-12 * std::max(1.0, s); });
  };
  if (!in(c.learning_rate, {1e-5, 5e-5, 1e-4})) out.push_back("learning_rate " + number(c.learning_rate));
  if (c.loss == LossKind::kFocal && !in(c.gamma, {2, 4, 8, 12})) out.push_back("gamma " + number(c.gamma));
  if (!in(c.weight_decay, {0.0, 0.01, 0.1})) out.push_back("weight_decay " + number(c.weight_decay));
  if (c.lora && (!in(static_cast<double>(c.lora->rank), {8, 16}) || !in(c.lora->alpha, {8, 16}))) {
    out.push_back("lora " + std::to_string(c.lora->rank) + "/" + number(c.lora->alpha));
  }
  if (c.batch_size != 32) out.push_back("batch_size " + std::to_string(c.batch_size));
  if (c.max_epochs != 30) out.push_back("max_epochs " + std::to_string(c.max_epochs));
  if (c.patience != 3) out.push_back("patience " + std::to_string(c.patience));
  return out;
}

TrainConfig parse_train_config(const std::string& yaml_text) {
  return TrainConfig::from_json(parse_yaml(yaml_text));
}

TrainJob load_train_job(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  json j = parse_yaml(text.str());
  if (!j.is_object()) throw Error(ErrorCode::kParseError, path.string() + " must be a mapping");
  TrainJob job;
  const auto base = path.parent_path();
  auto take_path = [&](const char* key) -> std::filesystem::path {
    if (!j.contains(key)) throw Error(ErrorCode::kParseError, path.string() + " lacks '" + key + "'");
    std::filesystem::path p = j[key].get<std::string>();
    j.erase(key);
    return p.is_absolute() ? p : base / p;
  };
  job.dataset = take_path("dataset");
  job.output_dir = take_path("output_dir");
  job.config = TrainConfig::from_json(j);
  validate(job.config);
  return job;
}

json EpochRecord::to_json() const {
  return {{"epoch", epoch},
          {"train_loss", train_loss},
          {"val_f1_macro", val_f1_macro},
          {"val_accuracy", val_accuracy},
          {"wall_seconds", wall_seconds}};
}

bool EarlyStopping::update(std::size_t epoch, double score) {
  if (best_epoch_ == 0 || score > best_score_) {
    best_epoch_ = epoch;
    best_score_ = score;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

EpochLoopResult run_epoch_loop(std::size_t max_epochs, std::size_t patience,
                               const std::function<EpochRecord(std::size_t)>& run_epoch,
                               const std::function<void(const EpochRecord&)>& on_best) {
  EarlyStopping stopper(patience);
  EpochLoopResult out;
  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    EpochRecord rec = run_epoch(epoch);
    rec.epoch = epoch;
    out.history.push_back(rec);
    if (stopper.update(epoch, rec.val_f1_macro) && on_best) on_best(rec);
    if (stopper.should_stop()) break;
  }
  out.best_epoch = stopper.best_epoch();
  out.best_val_f1_macro = stopper.best_score();
  return out;
}

AdamW::AdamW(std::vector<Parameter>& params, Options options) : params_(params), options_(options) {
  for (const auto& p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
}

void AdamW::step(double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.trainable) continue;
    if (p.decay && options_.weight_decay > 0) p.value *= 1.0 - learning_rate * options_.weight_decay;
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * p.grad;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= learning_rate * (m_[i].array() / c1) /
                       ((v_[i].array() / c2).sqrt() + options_.epsilon);
  }
}

double clip_grad_norm(std::vector<Parameter>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.trainable) sq += p.grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (std::isfinite(norm) && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-6);
    for (auto& p : params) {
      if (p.trainable) p.grad *= scale;
    }
  }
  return norm;
}

double linear_schedule(double base_rate, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0 || step >= total_steps) return 0.0;
  return base_rate * static_cast<double>(total_steps - step) / static_cast<double>(total_steps);
}

json RunResult::to_json() const {
  json history_json = json::array();
  for (const auto& r : history) history_json.push_back(r.to_json());
  return {{"config", config.to_json()},
          {"history", history_json},
          {"best_epoch", best_epoch},
          {"best_val_f1_macro", best_val_f1_macro},
          {"model_artifact", model_artifact ? json(model_artifact->string()) : json(nullptr)},
          {"test_report", test_report ? test_report->to_json() : json(nullptr)},
          {"trainable_parameters", trainable_parameters},
          {"total_parameters", total_parameters}};
}

SequenceClassifier instantiate_checkpoint(const TrainConfig& config) {
  if (auto arch = find_architecture(config.checkpoint_id)) {
    return SequenceClassifier(*arch, kNumLabels, config.seed);
  }
  const std::filesystem::path dir = config.checkpoint_id;
  if (std::filesystem::exists(dir / "model.json")) {
    try {
      auto model = SequenceClassifier::load(dir);
      if (model.lora()) model.merge_lora();
      for (auto& p : model.parameters()) p.trainable = true;
      if (model.num_classes() != kNumLabels) {
        throw Error(ErrorCode::kCheckpointUnavailable, "artifact head is not 12-way");
      }
      model.reset_head(config.seed);
      return model;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kCheckpointUnavailable) throw;
      throw Error(ErrorCode::kCheckpointUnavailable, config.checkpoint_id + ": " + e.what());
    }
  }
  throw Error(ErrorCode::kCheckpointUnavailable, "unknown checkpoint '" + config.checkpoint_id + "'");
}

RunResult fine_tune(const TrainConfig& config, const Dataset& train, const Dataset& val,
                    const FineTuneOptions& options, SequenceClassifier* model_out) {
  return train_impl(config, train, val, options, model_out);
}

RunResult fine_tune_lora(const TrainConfig& config, const Dataset& train, const Dataset& val,
                         const FineTuneOptions& options, SequenceClassifier* model_out) {
  if (!config.lora) throw Error(ErrorCode::kInvalidArgument, "fine_tune_lora needs a lora config");
  return train_impl(config, train, val, options, model_out);
}

std::vector<Label> predict_labels(const SequenceClassifier& model, const Dataset& data) {
  const auto ids = tokenize(model, data);
  std::vector<Label> out;
  out.reserve(ids.size());
  for (const auto& x : ids) out.push_back(Label::from_index(argmax(model.logits(x))));
  return out;
}

metrics::ClassificationReport evaluate(const SequenceClassifier& model, const Dataset& data) {
  std::vector<Label> truth;
  for (const auto& s : data.samples) truth.push_back(s.label);
  return metrics::report(truth, predict_labels(model, data));
}

const RunResult& select_best(const std::vector<RunResult>& results) {
  if (results.empty()) throw Error(ErrorCode::kEmptyInput, "no runs to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].best_val_f1_macro > results[best].best_val_f1_macro) best = i;
  }
  return results[best];
}

std::string_view stage_name(StageKind kind) {
  switch (kind) {
    case StageKind::kLearningRate: return "learning_rate";
    case StageKind::kFocalGamma: return "focal_gamma";
    case StageKind::kWeightDecay: return "weight_decay";
    case StageKind::kLora: return "lora";
  }
  return "learning_rate";
}

SweepPlan SweepPlan::paper() {
  return {{1e-5, 5e-5, 1e-4}, {2, 4, 8, 12}, {0.01, 0.1}, {{8, 8}, {8, 16}, {16, 8}, {16, 16}}};
}

SweepPlan SweepPlan::single(double learning_rate) { return {{learning_rate}, {}, {}, {}}; }

SweepResult sweep(const SweepPlan& plan, const TrainConfig& base, const Runner& runner) {
  if (plan.learning_rates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sweep plan needs at least one learning rate");
  }
  SweepResult out;
  // Index of the best run among the first `count` runs; ties keep the earliest.
  auto best_of = [&](std::size_t begin, std::size_t end) {
    std::size_t best = begin;
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (out.runs[i].result.best_val_f1_macro > out.runs[best].result.best_val_f1_macro) best = i;
    }
    return best;
  };
  auto run_stage = [&](StageKind kind, const std::vector<TrainConfig>& configs) {
    if (configs.empty()) return;
    const std::size_t begin = out.runs.size();
    for (const auto& c : configs) out.runs.push_back({kind, runner(c)});
    out.stage_winners.push_back(best_of(begin, out.runs.size()));
  };

  TrainConfig stage1 = base;
  stage1.loss = LossKind::kCrossEntropy;
  stage1.gamma = 0.0;
  stage1.weight_decay = 0.0;
  stage1.lora.reset();
  std::vector<TrainConfig> configs;
  for (double lr : plan.learning_rates) {
    configs.push_back(stage1);
    configs.back().learning_rate = lr;
  }
  run_stage(StageKind::kLearningRate, configs);
  const TrainConfig lr_winner = out.runs[out.stage_winners.back()].result.config;

  configs.clear();
  for (double g : plan.gammas) {
    configs.push_back(lr_winner);
    configs.back().loss = LossKind::kFocal;
    configs.back().gamma = g;
  }
  run_stage(StageKind::kFocalGamma, configs);
  const TrainConfig best12 = out.runs[best_of(0, out.runs.size())].result.config;

  configs.clear();
  for (double wd : plan.weight_decays) {
    configs.push_back(best12);
    configs.back().weight_decay = wd;
  }
  run_stage(StageKind::kWeightDecay, configs);
  const TrainConfig best123 = out.runs[best_of(0, out.runs.size())].result.config;

  configs.clear();
  for (const auto& l : plan.lora) {
    configs.push_back(best123);
    configs.back().lora = l;
  }
  run_stage(StageKind::kLora, configs);
  out.winner = best_of(0, out.runs.size());
  return out;
}

json SweepResult::grid_json() const {
  json runs_json = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i].result;
    runs_json.push_back({{"stage", stage_name(runs[i].stage)},
                         {"run", r.config.run_name()},
                         {"config", r.config.to_json()},
                         {"best_epoch", r.best_epoch},
                         {"best_val_f1_macro", r.best_val_f1_macro},
                         {"winner", i == winner}});
  }
  return {{"schema", "flicc.sweep"}, {"version", 1}, {"runs", runs_json},
          {"stage_winners", stage_winners}, {"winner", winner}};
}

std::string render_grid(const std::vector<std::pair<std::string, SweepResult>>& rows,
                        const SweepPlan& plan) {
  struct Column {
    StageKind stage;
    std::string header;
    std::function<bool(const TrainConfig&)> matches;
  };
  std::vector<Column> columns;
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  for (double lr : plan.learning_rates) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1E", lr);
    columns.push_back({StageKind::kLearningRate, buf, [=](const TrainConfig& c) { return same(c.learning_rate, lr); }});
  }
  for (double g : plan.gammas) {
    columns.push_back({StageKind::kFocalGamma, "g=" + number(g), [=](const TrainConfig& c) { return same(c.gamma, g); }});
  }
  for (double wd : plan.weight_decays) {
    columns.push_back({StageKind::kWeightDecay, "wd=" + number(wd), [=](const TrainConfig& c) { return same(c.weight_decay, wd); }});
  }
  for (const auto& l : plan.lora) {
    columns.push_back({StageKind::kLora, "r" + std::to_string(l.rank) + "/a" + number(l.alpha),
                       [=](const TrainConfig& c) {
                         return c.lora && c.lora->rank == l.rank && same(c.lora->alpha, l.alpha);
                       }});
  }

  std::size_t name_width = 17;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  std::ostringstream os;
  char cell[32];
  os << std::string(name_width, ' ');
  for (const auto& col : columns) {
    std::snprintf(cell, sizeof(cell), " %8s", col.header.c_str());
    os << cell;
  }
  os << '\n';
  for (const auto& [name, result] : rows) {
    os << name << std::string(name_width - name.size(), ' ');
    for (const auto& col : columns) {
      std::string text;
      for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const auto& run = result.runs[i];
        if (run.stage != col.stage || !col.matches(run.result.config)) continue;
        char v[16];
        std::snprintf(v, sizeof(v), "%.2f%s", run.result.best_val_f1_macro, i == result.winner ? "*" : "");
        text = v;
        break;
      }
      std::snprintf(cell, sizeof(cell), " %8s", text.c_str());
      os << cell;
    }
    os << '\n';
  }
  return os.str();
}

void write_run_files(const std::filesystem::path& run_dir, const RunResult& result) {
  std::filesystem::create_directories(run_dir);
  std::ofstream(run_dir / "config.yaml") << result.config.to_yaml();
  std::ofstream history(run_dir / "history.jsonl");
  for (const auto& r : result.history) history << r.to_json().dump() << '\n';
  if (result.test_report) {
    std::ofstream(run_dir / "test_report.json") << result.test_report->to_json().dump(2) << '\n';
  }
  std::ofstream(run_dir / "result.json") << result.to_json().dump(2) << '\n';
}

}  // namespace flicc::training
