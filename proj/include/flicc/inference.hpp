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

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "flicc/model.hpp"
#include "flicc/taxonomy.hpp"

namespace flicc::inference {

inline constexpr int kApiVersion = 1;

struct Prediction {
  Label label;
  std::array<double, kNumLabels> scores{};  // canonical order
  std::string model_version;
  std::string input_hash;  // "sha256:<hex>" of the UTF-8 input

  nlohmann::json to_json() const;
};

std::string sha256_hex(std::string_view bytes);

class Predictor {
 public:
  Predictor(SequenceClassifier model, std::string model_version);

  Prediction predict(std::string_view text) const;
  // Order-preserving; an empty text raises EmptyText naming its index.
  std::vector<Prediction> predict_batch(std::span<const std::string> texts) const;
  Eigen::VectorXd logits(std::string_view text) const;

  const std::string& model_version() const { return model_version_; }
  const SequenceClassifier& model() const { return model_; }

 private:
  SequenceClassifier model_;
  HashTokenizer tokenizer_;
  std::string model_version_;
};

// Reads an artifact directory written by the training module. Throws
// ArtifactCorrupt or VersionMismatch.
Predictor load_predictor(const std::filesystem::path& artifact);

// GET /labels payload: taxonomy version plus the 12 label rows.
nlohmann::json labels_json();

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string cors_origin = "*";
  std::size_t threads = 8;
};

// FLICC_BIND ("host:port" or ":port") and FLICC_CORS_ORIGIN override defaults.
ServeOptions serve_options_from_env(
    const std::function<std::optional<std::string>(const std::string&)>& env);
ServeOptions serve_options_from_env();

class Server {
 public:
  Server(std::shared_ptr<const Predictor> predictor, ServeOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and serves on a background thread. Throws BindFailure.
  void start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }
  const std::string& host() const { return options_.host; }

 private:
  struct Impl;
  void bind();

  std::shared_ptr<const Predictor> predictor_;
  ServeOptions options_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace flicc::inference
