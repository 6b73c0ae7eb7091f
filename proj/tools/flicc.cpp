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

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "flicc/corpus.hpp"
#include "flicc/curation.hpp"
#include "flicc/error.hpp"
#include "flicc/inference.hpp"
#include "flicc/llm_baseline.hpp"
#include "flicc/metrics.hpp"
#include "flicc/taxonomy.hpp"
#include "flicc/training.hpp"

namespace {

using json = nlohmann::json;
using namespace flicc;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

Dataset subset(const Dataset& data, Split split) {
  Dataset out;
  out.provenance = data.provenance;
  out.samples = data.in_split(split);
  return out;
}

SplitFractions parse_fractions(const std::string& text) {
  std::vector<double> parts;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad fraction '" + item + "'");
    }
  }
  if (parts.size() != 3) throw Error(ErrorCode::kInvalidArgument, "--fractions needs three values");
  return {parts[0], parts[1], parts[2]};
}

// Prediction files: JSONL with "id" and "label" (or "normalized"); null,
// "None" and "Unparseable" count as abstentions.
std::unordered_map<std::string, metrics::MaybeLabel> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::unordered_map<std::string, metrics::MaybeLabel> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, path + ":" + std::to_string(n) + ": " + e.what());
    }
    if (!j.contains("id") || !j["id"].is_string()) {
      throw Error(ErrorCode::kParseError, path + ":" + std::to_string(n) + ": missing id");
    }
    const json& value = j.contains("label") ? j["label"] : j.value("normalized", json(nullptr));
    metrics::MaybeLabel label;
    if (value.is_string() && value != "None" && value != "Unparseable") {
      label = parse_label(value.get<std::string>());
    } else if (!value.is_null() && !value.is_string()) {
      throw Error(ErrorCode::kParseError, path + ":" + std::to_string(n) + ": label must be a string");
    }
    if (!out.emplace(j["id"].get<std::string>(), label).second) {
      throw Error(ErrorCode::kDuplicateId, path + ": id '" + j["id"].get<std::string>() + "' repeats");
    }
  }
  return out;
}

std::string artifact_or_env(const std::string& model) {
  if (!model.empty()) return model;
  if (const char* env = std::getenv("FLICC_MODEL")) return env;
  throw Error(ErrorCode::kInvalidArgument, "--model (or FLICC_MODEL) is required");
}

void print_epoch(const training::EpochRecord& e) {
  std::fprintf(stderr, "epoch %2zu  loss %.4f  val_f1_macro %.4f  val_acc %.4f  %.1fs\n", e.epoch,
               e.train_loss, e.val_f1_macro, e.val_accuracy, e.wall_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fallacy classification workbench for climate misinformation"};
  app.require_subcommand(1);

  // split
  std::string dataset, out, fractions = "0.716,0.182,0.102";
  std::uint64_t seed = 0;
  auto* split = app.add_subcommand("split", "Assign stratified train/val/test tags");
  split->add_option("--dataset", dataset, "Input dataset (JSONL)")->required();
  split->add_option("--fractions", fractions, "train,val,test fractions");
  split->add_option("--seed", seed, "Shuffle seed");
  split->add_option("--out", out, "Output dataset (default stdout)");

  // summary
  bool as_json = false;
  auto* summary = app.add_subcommand("summary", "Per-label counts for each split");
  summary->add_option("--dataset", dataset, "Tagged dataset")->required();
  summary->add_flag("--json", as_json, "Emit JSON");

  // crosstab
  auto* crosstab = app.add_subcommand("crosstab", "Fallacy by claim cross-tabulation");
  crosstab->add_option("--dataset", dataset, "Dataset with claim codes")->required();
  crosstab->add_option("--out", out, "CSV output (default stdout)");
  crosstab->add_flag("--json", as_json, "Emit JSON instead of CSV");

  // curate
  std::string encoder = "lexical-hash", pooling = "mean";
  std::size_t topk = 100, dimension = 512;
  double contamination = 0.02;
  std::optional<std::size_t> centroid_top;
  auto* curate = app.add_subcommand("curate", "Write a duplicate and outlier review report");
  curate->add_option("--dataset", dataset, "Dataset (JSONL)")->required();
  curate->add_option("--encoder", encoder, "lexical-hash or model:<artifact dir>");
  curate->add_option("--pooling", pooling, "mean or first");
  curate->add_option("--dimension", dimension, "Hashed feature dimension");
  curate->add_option("--topk", topk, "Near-duplicate pairs to list");
  curate->add_option("--contamination", contamination, "Isolation forest contamination");
  curate->add_option("--centroid-top", centroid_top, "Centroid outliers to list");
  curate->add_option("--seed", seed, "Forest seed");
  curate->add_option("--out", out, "Review markdown")->required();

  // apply-removals
  std::string list;
  auto* removals = app.add_subcommand("apply-removals", "Drop reviewed sample ids");
  removals->add_option("--dataset", dataset, "Dataset (JSONL)")->required();
  removals->add_option("--list", list, "One id per line")->required();
  removals->add_option("--out", out, "Output dataset (default stdout)");

  // eval
  std::string truth, pred, split_name_opt;
  auto* eval = app.add_subcommand("eval", "Score predictions against labels");
  eval->add_option("--truth", truth, "Labeled dataset")->required();
  eval->add_option("--pred", pred, "Predictions JSONL (id, label)")->required();
  eval->add_option("--split", split_name_opt, "Only score this split of the truth file");
  eval->add_option("--out", out, "Report JSON");

  // train
  std::string config_path;
  auto* train = app.add_subcommand("train", "Fine-tune one configuration");
  train->add_option("--config", config_path, "Run config YAML")->required();

  // sweep
  std::string plan = "paper", checkpoint = "flicc-encoder-base";
  std::size_t max_epochs = 30, batch_size = 32;
  double learning_rate = 5e-5;
  auto* sweep = app.add_subcommand("sweep", "Run the staged hyperparameter sweep");
  sweep->add_option("--plan", plan, "paper or single")->check(CLI::IsMember({"paper", "single"}));
  sweep->add_option("--checkpoint", checkpoint, "Checkpoint id or artifact directory");
  sweep->add_option("--dataset", dataset, "Tagged dataset")->required();
  sweep->add_option("--out", out, "Sweep directory")->required();
  sweep->add_option("--seed", seed, "Training seed");
  sweep->add_option("--max-epochs", max_epochs, "Epoch budget per run");
  sweep->add_option("--batch-size", batch_size, "Batch size");
  sweep->add_option("--learning-rate", learning_rate, "Learning rate for the single plan");

  // llm-eval
  std::string provider, model_id, test_path, archive, base_url, report_out;
  std::size_t max_inflight = 4;
  double temperature = 0.0;
  auto* llm = app.add_subcommand("llm-eval", "Zero-shot LLM baseline");
  llm->add_option("--provider", provider, "openai, gemini, stub:<answer> or replay:<archive>")->required();
  llm->add_option("--model", model_id, "Provider model id");
  llm->add_option("--test", test_path, "Test dataset")->required();
  llm->add_option("--split", split_name_opt, "Only use this split of the test file");
  llm->add_option("--archive", archive, "Verdict archive (appended, resumable)")->required();
  llm->add_option("--max-inflight", max_inflight, "Concurrent requests");
  llm->add_option("--temperature", temperature, "Sampling temperature");
  llm->add_option("--base-url", base_url, "Override the provider endpoint");
  llm->add_option("--out", report_out, "Report JSON");

  // predict
  std::string model_dir, text, file;
  auto* predict = app.add_subcommand("predict", "Classify text with a trained artifact");
  predict->add_option("--model", model_dir, "Artifact directory (or FLICC_MODEL)");
  auto* text_opt = predict->add_option("--text", text, "Text to classify");
  auto* file_opt = predict->add_option("--file", file, "One text per line, or JSONL with id/text");
  text_opt->excludes(file_opt);
  predict->add_option("--out", out, "Output JSONL (default stdout)");

  // serve
  std::string bind;
  std::size_t threads = 8;
  auto* serve = app.add_subcommand("serve", "HTTP prediction service");
  serve->add_option("--model", model_dir, "Artifact directory (or FLICC_MODEL)");
  serve->add_option("--bind", bind, "host:port (default FLICC_BIND or 127.0.0.1:8080)");
  serve->add_option("--threads", threads, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (split->parsed()) {
      const auto data = stratified_split(load_dataset(dataset), parse_fractions(fractions), seed);
      std::ostringstream os;
      write_dataset(data, os);
      write_text(out, os.str());
      std::cerr << split_summary(data).render();
    } else if (summary->parsed()) {
      const auto s = split_summary(load_dataset(dataset));
      std::cout << (as_json ? s.to_json().dump(2) + "\n" : s.render());
    } else if (crosstab->parsed()) {
      const auto t = cross_tabulate(load_dataset(dataset));
      write_text(out, as_json ? t.to_json().dump(2) + "\n" : t.render_csv());
    } else if (curate->parsed()) {
      const auto data = load_dataset(dataset);
      curation::CurateOptions opt;
      opt.encoder = {encoder, parse_pooling(pooling), dimension};
      opt.top_k = topk;
      opt.contamination = contamination;
      opt.seed = seed;
      opt.centroid_top = centroid_top;
      const auto entries = curation::review_report(curation::curate(data, opt), out, &data);
      std::cerr << "wrote " << entries.size() << " review entries to " << out << '\n';
    } else if (removals->parsed()) {
      const auto before = load_dataset(dataset);
      const auto ids = read_id_list(list);
      const auto after = apply_removals(before, ids);
      std::ostringstream os;
      write_dataset(after, os);
      write_text(out, os.str());
      std::cerr << "removed " << before.size() - after.size() << " of " << before.size()
                << " samples\n";
    } else if (eval->parsed()) {
      auto truth_data = load_dataset(truth);
      if (!split_name_opt.empty()) truth_data = subset(truth_data, parse_split(split_name_opt));
      const auto preds = read_predictions(pred);
      std::vector<Label> t;
      std::vector<metrics::MaybeLabel> p;
      for (const auto& s : truth_data.samples) {
        auto it = preds.find(s.id);
        if (it == preds.end()) throw Error(ErrorCode::kLengthMismatch, "no prediction for '" + s.id + "'");
        t.push_back(s.label);
        p.push_back(it->second);
      }
      const auto report = metrics::report(t, p);
      const auto matrix = metrics::confusion(t, p);
      std::cout << report.render() << '\n' << metrics::render_normalized(matrix);
      if (!out.empty()) {
        json j = report.to_json();
        j["confusion"] = matrix.to_json();
        write_text(out, j.dump(2) + "\n");
      }
    } else if (train->parsed()) {
      const auto job = training::load_train_job(config_path);
      for (const auto& v : training::paper_protocol_violations(job.config)) {
        std::cerr << "note: outside the published grid: " << v << '\n';
      }
      const auto data = load_dataset(job.dataset);
      const auto test = subset(data, Split::kTest);
      SequenceClassifier model(*find_architecture("flicc-encoder-tiny"), kNumLabels, 0);
      auto result = job.config.lora
                        ? training::fine_tune_lora(job.config, subset(data, Split::kTrain),
                                                   subset(data, Split::kVal),
                                                   {job.output_dir, print_epoch}, &model)
                        : training::fine_tune(job.config, subset(data, Split::kTrain),
                                              subset(data, Split::kVal),
                                              {job.output_dir, print_epoch}, &model);
      if (!test.samples.empty()) result.test_report = training::evaluate(model, test);
      training::write_run_files(job.output_dir, result);
      std::cout << "best epoch " << result.best_epoch << ", val F1-macro "
                << result.best_val_f1_macro << "\nartifact " << result.model_artifact->string() << '\n';
      if (result.test_report) std::cout << result.test_report->render();
    } else if (sweep->parsed()) {
      const auto data = load_dataset(dataset);
      const auto train_set = subset(data, Split::kTrain);
      const auto val_set = subset(data, Split::kVal);
      const auto test_set = subset(data, Split::kTest);
      training::TrainConfig base;
      base.checkpoint_id = checkpoint;
      base.seed = seed;
      base.max_epochs = max_epochs;
      base.batch_size = batch_size;
      const auto sweep_plan =
          plan == "paper" ? training::SweepPlan::paper() : training::SweepPlan::single(learning_rate);
      const std::filesystem::path root = out;
      auto result = training::sweep(sweep_plan, base, [&](const training::TrainConfig& c) {
        std::cerr << "run " << c.run_name() << '\n';
        const auto dir = root / "runs" / c.run_name();
        auto r = training::fine_tune(c, train_set, val_set, {dir, print_epoch});
        training::write_run_files(dir, r);
        return r;
      });
      auto& best = result.runs[result.winner].result;
      if (!test_set.samples.empty() && best.model_artifact) {
        const auto model = SequenceClassifier::load(*best.model_artifact);
        best.test_report = training::evaluate(model, test_set);
        training::write_run_files(root / "runs" / best.config.run_name(), best);
      }
      const auto grid = training::render_grid({{checkpoint, result}}, sweep_plan);
      write_text((root / "grid.txt").string(), grid);
      write_text((root / "grid.json").string(), result.grid_json().dump(2) + "\n");
      std::cout << grid << "winner " << best.config.run_name() << " (val F1-macro "
                << best.best_val_f1_macro << ")\n";
      if (best.test_report) std::cout << best.test_report->render();
    } else if (llm->parsed()) {
      auto test = load_dataset(test_path);
      if (!split_name_opt.empty()) test = subset(test, parse_split(split_name_opt));
      llm::ProviderConfig pc{provider, model_id, temperature, true,
                             base_url.empty() ? std::nullopt : std::optional<std::string>(base_url)};
      auto p = llm::make_provider(pc);
      llm::EvaluateOptions opt{archive};
      opt.max_inflight = max_inflight;
      opt.model_id = model_id;
      opt.temperature = temperature;
      opt.progress = [](std::size_t done, std::size_t total) {
        if (done % 16 == 0 || done == total) std::fprintf(stderr, "%zu/%zu\n", done, total);
      };
      const auto r = llm::evaluate_llm(test, *p, opt);
      std::cout << r.report.render() << '\n' << r.census.render();
      if (!report_out.empty()) write_text(report_out, r.to_json().dump(2) + "\n");
    } else if (predict->parsed()) {
      const auto predictor = inference::load_predictor(artifact_or_env(model_dir));
      if (!text_opt->empty()) {
        std::cout << predictor.predict(text).to_json().dump(2) << '\n';
      } else if (!file_opt->empty()) {
        std::ifstream in(file);
        if (!in) throw Error(ErrorCode::kIoError, "cannot read " + file);
        std::ostringstream os;
        std::string line;
        for (std::size_t n = 1; std::getline(in, line); ++n) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          std::string id = std::to_string(n), body = line;
          if (line.front() == '{') {
            const auto j = json::parse(line, nullptr, false);
            if (!j.is_discarded() && j.contains("text")) {
              body = j["text"].get<std::string>();
              if (j.contains("id")) id = j["id"].get<std::string>();
            }
          }
          json record = predictor.predict(body).to_json();
          record["id"] = id;
          os << record.dump() << '\n';
        }
        write_text(out, os.str());
      } else {
        throw Error(ErrorCode::kInvalidArgument, "predict needs --text or --file");
      }
    } else if (serve->parsed()) {
      auto predictor =
          std::make_shared<const inference::Predictor>(inference::load_predictor(artifact_or_env(model_dir)));
      auto options = inference::serve_options_from_env();
      if (!bind.empty()) {
        options = inference::serve_options_from_env([&](const std::string& k) -> std::optional<std::string> {
          if (k == "FLICC_BIND") return bind;
          const char* v = std::getenv(k.c_str());
          return v ? std::optional<std::string>(v) : std::nullopt;
        });
      }
      options.threads = threads;
      inference::Server server(predictor, options);
      std::cerr << "serving " << predictor->model_version() << " on " << options.host << ':'
                << options.port << '\n';
      server.run();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
