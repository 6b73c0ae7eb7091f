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

#include "flicc/inference.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

#include <openssl/evp.h>

#include "flicc/error.hpp"
#include "flicc/loss.hpp"

namespace flicc::inference {
namespace {

using json = nlohmann::json;

bool blank(std::string_view text) {
  for (unsigned char c : text) {
    if (!std::isspace(c)) return false;
  }
  return true;
}

}  // namespace

json Prediction::to_json() const {
  json s = json::object();
  for (std::size_t i = 0; i < kNumLabels; ++i) s[std::string(Label::from_index(i).name())] = scores[i];
  return {{"api_version", kApiVersion},
          {"label", label.name()},
          {"display_name", label.info().display_name},
          {"scores", s},
          {"model_version", model_version},
          {"input_hash", input_hash}};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kInvalidArgument, "SHA-256 failed");
  }
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    out += buf;
  }
  return out;
}

Predictor::Predictor(SequenceClassifier model, std::string model_version)
    : model_(std::move(model)), tokenizer_(model_.tokenizer()),
      model_version_(std::move(model_version)) {
  if (model_.num_classes() != kNumLabels) {
    throw Error(ErrorCode::kArtifactCorrupt, "model head is not 12-way");
  }
}

Eigen::VectorXd Predictor::logits(std::string_view text) const {
  return model_.logits(tokenizer_.encode(text));
}

Prediction Predictor::predict(std::string_view text) const {
  if (blank(text)) throw Error(ErrorCode::kEmptyText, "text is empty");
  const Eigen::VectorXd p = softmax(logits(text));
  Prediction out{Label::from_index(0), {}, model_version_, "sha256:" + sha256_hex(text)};
  std::size_t best = 0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    out.scores[i] = p[static_cast<long>(i)];
    if (out.scores[i] > out.scores[best]) best = i;
  }
  out.label = Label::from_index(best);
  return out;
}

std::vector<Prediction> Predictor::predict_batch(std::span<const std::string> texts) const {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (blank(texts[i])) throw Error(ErrorCode::kEmptyText, "text " + std::to_string(i) + " is empty");
  }
  std::vector<Prediction> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(predict(t));
  return out;
}

Predictor load_predictor(const std::filesystem::path& artifact) {
  json meta;
  auto model = SequenceClassifier::load(artifact, &meta);
  std::string version;
  if (meta.contains("model_version") && meta["model_version"].is_string()) {
    version = meta["model_version"].get<std::string>();
  } else {
    version = "unversioned-" + meta.value("checksum", std::string("0"));
  }
  return Predictor(std::move(model), std::move(version));
}

json labels_json() {
  json labels = json::array();
  for (const auto& info : fallacy_labels()) {
    json row = {{"canonical_name", info.canonical_name},
                {"display_name", info.display_name},
                {"fallacy_type", fallacy_type_name(info.fallacy_type)},
                {"definition", info.definition}};
    row["argument_structure"] = info.argument_structure ? json(*info.argument_structure) : json(nullptr);
    labels.push_back(std::move(row));
  }
  return {{"api_version", kApiVersion}, {"taxonomy_version", taxonomy_version()}, {"labels", labels}};
}

ServeOptions serve_options_from_env(
    const std::function<std::optional<std::string>(const std::string&)>& env) {
  ServeOptions opt;
  if (auto bind = env("FLICC_BIND")) {
    const auto colon = bind->rfind(':');
    std::string port_text = *bind;
    if (colon != std::string::npos) {
      if (colon > 0) opt.host = bind->substr(0, colon);
      port_text = bind->substr(colon + 1);
    }
    char* end = nullptr;
    const long port = std::strtol(port_text.c_str(), &end, 10);
    if (port_text.empty() || *end != '\0' || port < 0 || port > 65535) {
      throw Error(ErrorCode::kInvalidArgument, "FLICC_BIND must be host:port, got '" + *bind + "'");
    }
    opt.port = static_cast<int>(port);
  }
  if (auto origin = env("FLICC_CORS_ORIGIN")) opt.cors_origin = *origin;
  return opt;
}

ServeOptions serve_options_from_env() {
  return serve_options_from_env([](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  });
}

}  // namespace flicc::inference
