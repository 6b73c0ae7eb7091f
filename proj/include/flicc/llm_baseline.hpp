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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flicc/corpus.hpp"
#include "flicc/metrics.hpp"
#include "flicc/taxonomy.hpp"

namespace flicc::llm {

// Display names of all labels in canonical order.
std::vector<std::string> prompt_labels();

// "Please classify a piece of text into the following categories of logical
// fallacies: <labels>. Text: <text> Label: ". Throws EmptyText.
std::string build_prompt(std::span<const std::string> labels, std::string_view text);
std::string build_prompt(std::string_view text);

struct LlmRequest {
  std::string provider;
  std::string model_id;
  std::string prompt;
  double temperature = 0.0;
  bool disable_safety_filters = false;
};

struct HttpRequest {
  std::string url;  // scheme://host[:port]/path
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::optional<double> retry_after_seconds;
};

// POSTs a request. Implementations throw ProviderError for connection-level
// failures.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::unique_ptr<Transport> make_https_transport(std::chrono::seconds timeout = std::chrono::seconds(60));

struct RetryPolicy {
  std::size_t max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds max_backoff{30000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

// Sends with retries on 429, 5xx and connection failures, doubling the wait
// each time (or honoring Retry-After). 401/403 raise AuthError, other 4xx
// ProviderError; exhausting retries raises RateLimited or ProviderError.
HttpResponse post_with_retry(Transport& transport, const HttpRequest& request,
                             const RetryPolicy& policy);

// Returns a completion for the prompt; content blocks come back as "".
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  virtual std::string classify(const LlmRequest& request) = 0;
};

struct ProviderConfig {
  std::string provider;  // openai, gemini, stub:<answer>, replay:<archive>
  std::string model_id;
  double temperature = 0.0;
  bool disable_safety_filters = true;
  std::optional<std::string> base_url;
  RetryPolicy retry;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// OpenAI reads OPENAI_API_KEY; Gemini reads GEMINI_API_KEY or GOOGLE_API_KEY.
// Missing credentials raise AuthError; unknown ids raise InvalidArgument.
std::unique_ptr<Provider> make_provider(const ProviderConfig& config,
                                        std::shared_ptr<Transport> transport = nullptr,
                                        const EnvLookup& env = process_env);

std::unique_ptr<Provider> make_openai_provider(std::shared_ptr<Transport> transport,
                                               std::string api_key, std::string base_url,
                                               RetryPolicy retry);
std::unique_ptr<Provider> make_gemini_provider(std::shared_ptr<Transport> transport,
                                               std::string api_key, std::string base_url,
                                               RetryPolicy retry);
std::unique_ptr<Provider> make_stub_provider(std::function<std::string(const LlmRequest&)> answer);
// Answers each prompt with the raw response archived for it; unknown prompts
// raise ProviderError.
std::unique_ptr<Provider> make_replay_provider(const std::filesystem::path& archive);

enum class NormalizationRule { kExact, kLabelSuffix, kLastSubstring, kNoneMarker, kUnparseable };
std::string_view rule_name(NormalizationRule rule);
NormalizationRule parse_rule(std::string_view name);

enum class VerdictKind { kLabel, kNone, kUnparseable };

struct LlmVerdict {
  std::string raw_response;
  VerdictKind kind = VerdictKind::kUnparseable;
  std::optional<Label> label;
  NormalizationRule rule = NormalizationRule::kUnparseable;

  // Label name, "None" or "Unparseable".
  std::string normalized() const;
  metrics::MaybeLabel prediction() const { return label; }
};

// Rules in order: exact label, trailing "Label: X", last label mentioned,
// None/None of the above/empty, unparseable.
LlmVerdict normalize_response(std::string_view raw);

struct ArchiveRecord {
  std::string id;
  std::string prompt;
  std::string raw;
  std::string normalized;
  std::string rule;

  nlohmann::json to_json() const;
  static ArchiveRecord from_json(const nlohmann::json& j);
};

std::vector<ArchiveRecord> read_archive(const std::filesystem::path& path);

struct FailureCensus {
  std::size_t labeled = 0;
  std::size_t none_marker = 0;
  std::size_t unparseable = 0;
  std::map<std::string, std::size_t> rules;
  // Most frequent first; ties in canonical order.
  std::vector<std::pair<Label, std::size_t>> prediction_frequency;

  std::size_t unlabeled() const { return none_marker + unparseable; }
  nlohmann::json to_json() const;
  std::string render() const;
};

struct LlmEvaluation {
  metrics::ClassificationReport report;
  metrics::ConfusionMatrix confusion;
  FailureCensus census;
  std::vector<LlmVerdict> verdicts;  // test-set order
  std::size_t queried = 0;           // new provider calls in this run
  std::size_t resumed = 0;           // verdicts taken from an existing archive

  nlohmann::json to_json() const;
};

struct EvaluateOptions {
  std::filesystem::path archive;
  std::size_t max_inflight = 4;
  std::string model_id;
  double temperature = 0.0;
  bool disable_safety_filters = true;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Queries every sample not yet in the archive, appending each verdict as it
// arrives, then scores from the archive. A persistent provider failure stops
// new requests, keeps what was archived and rethrows.
LlmEvaluation evaluate_llm(const Dataset& test, Provider& provider, const EvaluateOptions& options);

// Scores a finished archive against the test set without any provider.
LlmEvaluation score_archive(const Dataset& test, const std::filesystem::path& archive);

}  // namespace flicc::llm
