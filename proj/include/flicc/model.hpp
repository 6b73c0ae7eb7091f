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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "flicc/tokenizer.hpp"

namespace flicc {

enum class Pooling { kMean, kFirst };

std::string_view pooling_name(Pooling pooling);
Pooling parse_pooling(std::string_view name);

// Shape of a bidirectional (unmasked) pre-norm transformer encoder with a
// linear classification head on the pooled final states. layers == 0 gives a
// bag-of-embeddings model.
struct Architecture {
  std::string id;
  std::size_t vocab_size = 16384;
  std::size_t max_length = 128;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn = 256;
  Pooling pooling = Pooling::kMean;

  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);
};

// Architectures addressable by checkpoint id.
std::span<const Architecture> checkpoint_registry();
std::optional<Architecture> find_architecture(std::string_view id);

struct LoraConfig {
  std::size_t rank = 8;
  double alpha = 8.0;

  double scale() const { return alpha / static_cast<double>(rank); }
};

struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool trainable = true;
  // Decoupled weight decay applies to weight matrices and embeddings only.
  bool decay = true;
};

inline constexpr int kModelFormatVersion = 1;

class SequenceClassifier {
 public:
  SequenceClassifier(Architecture arch, std::size_t num_classes, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  std::size_t num_classes() const { return num_classes_; }
  HashTokenizer tokenizer() const { return HashTokenizer(arch_.vocab_size, arch_.max_length); }

  struct LayerCache {
    Eigen::MatrixXd input, ln1_hat, a, q, k, v, aq, av, o, h1, ln2_hat, b, u, g;
    Eigen::VectorXd ln1_rstd, ln2_rstd;
    std::vector<Eigen::MatrixXd> attention;  // per head, T x T
  };
  struct ForwardCache {
    std::vector<int> ids;
    std::vector<LayerCache> layers;
    Eigen::MatrixXd last, lnf_hat, states;
    Eigen::VectorXd lnf_rstd;
    Eigen::VectorXd pooled;
    Eigen::VectorXd logits;
  };

  ForwardCache forward(std::span<const int> ids) const;
  // Adds d(loss)/d(parameter) for the given d(loss)/d(logits) into the grads
  // of trainable parameters.
  void backward(const ForwardCache& cache, const Eigen::Ref<const Eigen::VectorXd>& dlogits);

  Eigen::VectorXd logits(std::span<const int> ids) const { return forward(ids).logits; }
  // Final-layer token states, one row per token.
  Eigen::MatrixXd hidden_states(std::span<const int> ids) const { return forward(ids).states; }
  Eigen::VectorXd pooled(std::span<const int> ids, Pooling pooling) const;

  bool supports_lora() const { return arch_.layers > 0; }
  // Adds rank-r adapters to the query and value projections and freezes every
  // other parameter except the classification head. Adapter B starts at zero,
  // so logits are unchanged until training moves it.
  void attach_lora(const LoraConfig& lora, std::uint64_t seed);
  // Folds W + (alpha/r) A B into the base weights and drops the adapters.
  void merge_lora();
  const std::optional<LoraConfig>& lora() const { return lora_; }

  // Fresh classification head; used when fine-tuning from another artifact.
  void reset_head(std::uint64_t seed);

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  std::size_t trainable_parameter_count() const;
  void zero_grad();

  // Writes model.json (architecture, parameter manifest, checksum plus the
  // caller's metadata) and weights.bin.
  void save(const std::filesystem::path& dir, const nlohmann::json& metadata = {}) const;
  // Throws ArtifactCorrupt or VersionMismatch.
  static SequenceClassifier load(const std::filesystem::path& dir,
                                 nlohmann::json* metadata = nullptr);

 private:
  struct LayerIndex {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
    std::optional<std::size_t> aq, bq_lora, av, bv_lora;
  };

  std::size_t add(std::string name, Eigen::MatrixXd value, bool decay);
  const Eigen::MatrixXd& w(std::size_t i) const { return params_[i].value; }
  void add_grad(std::size_t i, const Eigen::MatrixXd& g);
  Eigen::MatrixXd effective_query(const LayerIndex& li) const;
  Eigen::MatrixXd effective_value(const LayerIndex& li) const;

  Architecture arch_;
  std::size_t num_classes_;
  std::vector<Parameter> params_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, lnf_g_ = 0, lnf_b_ = 0, head_w_ = 0, head_b_ = 0;
  std::vector<LayerIndex> layers_;
  std::optional<LoraConfig> lora_;
};

}  // namespace flicc
