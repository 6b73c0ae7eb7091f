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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flicc/corpus.hpp"
#include "flicc/metrics.hpp"
#include "flicc/model.hpp"

namespace flicc::training {

enum class LossKind { kCrossEntropy, kFocal };

struct TrainConfig {
  std::string checkpoint_id = "flicc-encoder-base";
  double learning_rate = 5e-5;
  LossKind loss = LossKind::kCrossEntropy;
  double gamma = 0.0;  // used when loss is focal
  double weight_decay = 0.0;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  std::size_t patience = 3;
  std::uint64_t seed = 0;
  std::optional<LoraConfig> lora;
  double clip_norm = 1.0;

  // Gamma handed to the loss; cross-entropy is focal loss with gamma 0.
  double effective_gamma() const { return loss == LossKind::kFocal ? gamma : 0.0; }

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  std::string to_yaml() const;
  // Short stable name such as "lr1e-05_focal4_wd0.01_lora8x16".
  std::string run_name() const;
};

// Throws InvalidArgument for values outside the legal ranges.
void validate(const TrainConfig& config);
// Grid constraints of the published protocol that this config violates.
std::vector<std::string> paper_protocol_violations(const TrainConfig& config);

// A run description read from a YAML file: the config plus where the data
// lives and where the run directory goes. Relative paths resolve against the
// file's directory.
struct TrainJob {
  TrainConfig config;
  std::filesystem::path dataset;
  std::filesystem::path output_dir;
};
TrainJob load_train_job(const std::filesystem::path& path);
TrainConfig parse_train_config(const std::string& yaml_text);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_f1_macro = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

// Stops after `patience` consecutive epochs that fail to strictly beat the
// best validation score.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when the score is a new best.
  bool update(std::size_t epoch, double score);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_score_ = 0.0;
  std::size_t since_best_ = 0;
};

struct EpochLoopResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_f1_macro = 0.0;
};

// Runs epochs 1..max_epochs, calling `on_best` whenever an epoch sets a new
// best, until early stopping triggers.
EpochLoopResult run_epoch_loop(std::size_t max_epochs, std::size_t patience,
                               const std::function<EpochRecord(std::size_t)>& run_epoch,
                               const std::function<void(const EpochRecord&)>& on_best = {});

// Decoupled-weight-decay Adam over the trainable parameters of a model.
class AdamW {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
  };

  AdamW(std::vector<Parameter>& params, Options options);
  void step(double learning_rate);
  std::size_t steps() const { return t_; }

 private:
  std::vector<Parameter>& params_;
  Options options_;
  std::vector<Eigen::MatrixXd> m_, v_;
  std::size_t t_ = 0;
};

// Scales trainable gradients so their joint L2 norm is at most max_norm and
// returns the norm before clipping.
double clip_grad_norm(std::vector<Parameter>& params, double max_norm);

// Linear decay from the base rate to zero over total_steps.
double linear_schedule(double base_rate, std::size_t step, std::size_t total_steps);

struct RunResult {
  TrainConfig config;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_f1_macro = 0.0;
  std::optional<std::filesystem::path> model_artifact;
  std::optional<metrics::ClassificationReport> test_report;
  std::size_t trainable_parameters = 0;
  std::size_t total_parameters = 0;

  double trainable_ratio() const {
    return total_parameters ? static_cast<double>(trainable_parameters) / total_parameters : 0.0;
  }
  nlohmann::json to_json() const;
};

struct FineTuneOptions {
  // When set, receives config.yaml, history.jsonl and model/.
  std::optional<std::filesystem::path> run_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Builds the model named by config.checkpoint_id: a registry architecture
// with fresh weights, or an artifact directory whose encoder is reused with a
// new head. Throws CheckpointUnavailable otherwise.
SequenceClassifier instantiate_checkpoint(const TrainConfig& config);

// Trains with early stopping on validation F1-macro and returns the run with
// the best epoch's weights restored in `model_out` when given.
RunResult fine_tune(const TrainConfig& config, const Dataset& train, const Dataset& val,
                    const FineTuneOptions& options = {},
                    SequenceClassifier* model_out = nullptr);
// As fine_tune but requires config.lora and trains adapters plus head only.
RunResult fine_tune_lora(const TrainConfig& config, const Dataset& train, const Dataset& val,
                         const FineTuneOptions& options = {},
                         SequenceClassifier* model_out = nullptr);

std::vector<Label> predict_labels(const SequenceClassifier& model, const Dataset& data);
metrics::ClassificationReport evaluate(const SequenceClassifier& model, const Dataset& data);

// Best by best_val_f1_macro; ties keep the earliest. Throws EmptyInput.
const RunResult& select_best(const std::vector<RunResult>& results);

enum class StageKind { kLearningRate, kFocalGamma, kWeightDecay, kLora };
std::string_view stage_name(StageKind kind);

struct SweepPlan {
  std::vector<double> learning_rates;
  std::vector<double> gammas;
  std::vector<double> weight_decays;
  std::vector<LoraConfig> lora;

  // Learning rates {1e-5, 5e-5, 1e-4}, gammas {2, 4, 8, 12}, weight decays
  // {0.01, 0.1}, LoRA rank x alpha over {8, 16}.
  static SweepPlan paper();
  static SweepPlan single(double learning_rate);
};

struct SweepRun {
  StageKind stage;
  RunResult result;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::vector<std::size_t> stage_winners;  // index into runs, one per non-empty stage
  std::size_t winner = 0;                  // index into runs

  const RunResult& best() const { return runs.at(winner).result; }
  nlohmann::json grid_json() const;
};

using Runner = std::function<RunResult(const TrainConfig&)>;

// Stage 1 varies the learning rate with cross-entropy and no weight decay;
// stage 2 tries focal gammas at the stage-1 winner; stage 3 adds weight decay
// to the best of stages 1-2; stage 4 adds LoRA to the best of stages 1-3.
SweepResult sweep(const SweepPlan& plan, const TrainConfig& base, const Runner& runner);

// One row per checkpoint with the plan's columns, two decimals, blank where a
// stage was not run. The winner of each row is marked with '*'.
std::string render_grid(const std::vector<std::pair<std::string, SweepResult>>& rows,
                        const SweepPlan& plan);

// Writes config.yaml, history.jsonl and, when present, test_report.json.
void write_run_files(const std::filesystem::path& run_dir, const RunResult& result);

}  // namespace flicc::training
