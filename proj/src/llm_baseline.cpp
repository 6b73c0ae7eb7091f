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

#include "flicc/llm_baseline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "flicc/error.hpp"

namespace flicc::llm {
namespace {

using json = nlohmann::json;

constexpr std::string_view kNoneText = "None";
constexpr std::string_view kUnparseableText = "Unparseable";

std::string trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c); };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

// Drops wrapping quotes, brackets, markdown emphasis and trailing punctuation.
std::string strip_decoration(std::string_view s) {
  constexpr std::string_view kWrap = "\"'`*[]()<>_ \t\r\n";
  constexpr std::string_view kTail = ".,;:!?";
  std::string out = trim(s);
  bool changed = true;
  while (changed && !out.empty()) {
    changed = false;
    if (kWrap.find(out.front()) != std::string_view::npos) {
      out.erase(out.begin());
      changed = true;
    }
    if (!out.empty() && (kWrap.find(out.back()) != std::string_view::npos ||
                         kTail.find(out.back()) != std::string_view::npos)) {
      out.pop_back();
      changed = true;
    }
  }
  return out;
}

bool is_none_text(std::string_view s) {
  const std::string norm = normalize_label_text(strip_decoration(s));
  return norm.empty() || norm == "none" || norm == "none of the above";
}

// Lowercase, hyphens and underscores as spaces, whitespace collapsed.
std::string scan_text(std::string_view raw) {
  std::string out;
  bool space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c) || c == '-' || c == '_') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::optional<Label> last_mentioned_label(std::string_view raw) {
  const std::string text = scan_text(raw);
  std::optional<Label> best;
  std::size_t best_pos = 0;
  for (const auto label : all_labels()) {
    const std::string_view name = label.name();
    for (std::size_t pos = text.rfind(name); pos != std::string::npos;
         pos = pos == 0 ? std::string::npos : text.rfind(name, pos - 1)) {
      const bool left = pos == 0 || !word_char(text[pos - 1]);
      const std::size_t end = pos + name.size();
      const bool right = end == text.size() || !word_char(text[end]);
      if (left && right) {
        if (!best || pos > best_pos) {
          best = label;
          best_pos = pos;
        }
        break;
      }
    }
  }
  return best;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string snippet(const std::string& body) {
  return body.size() > 300 ? body.substr(0, 300) + "..." : body;
}

json parse_body(const HttpResponse& response, std::string_view provider) {
  try {
    return json::parse(response.body);
  } catch (const json::exception&) {
    throw Error(ErrorCode::kProviderError,
                std::string(provider) + " returned a non-JSON body: " + snippet(response.body));
  }
}

class OpenAiProvider final : public Provider {
 public:
  OpenAiProvider(std::shared_ptr<Transport> transport, std::string key, std::string base,
                 RetryPolicy retry)
      : transport_(std::move(transport)), key_(std::move(key)), base_(std::move(base)),
        retry_(std::move(retry)) {}

  std::string id() const override { return "openai"; }

  std::string classify(const LlmRequest& request) override {
    const json body = {{"model", request.model_id},
                       {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                       {"temperature", request.temperature}};
    const auto response = post_with_retry(
        *transport_,
        {base_ + "/v1/chat/completions",
         {{"Authorization", "Bearer " + key_}, {"Content-Type", "application/json"}},
         body.dump()},
        retry_);
    const json j = parse_body(response, "openai");
    const auto& choices = j.value("choices", json::array());
    if (choices.empty()) return "";
    const auto& message = choices[0].value("message", json::object());
    const auto content = message.find("content");
    if (content == message.end() || !content->is_string()) return "";
    return content->get<std::string>();
  }

 private:
  std::shared_ptr<Transport> transport_;
  std::string key_, base_;
  RetryPolicy retry_;
};

class GeminiProvider final : public Provider {
 public:
  GeminiProvider(std::shared_ptr<Transport> transport, std::string key, std::string base,
                 RetryPolicy retry)
      : transport_(std::move(transport)), key_(std::move(key)), base_(std::move(base)),
        retry_(std::move(retry)) {}

  std::string id() const override { return "gemini"; }

  std::string classify(const LlmRequest& request) override {
    json body = {
        {"contents", json::array({{{"role", "user"}, {"parts", json::array({{{"text", request.prompt}}})}}})},
        {"generationConfig", {{"temperature", request.temperature}}}};
    if (request.disable_safety_filters) {
      body["safetySettings"] = json::array();
      for (const char* category : {"HARM_CATEGORY_HARASSMENT", "HARM_CATEGORY_HATE_SPEECH",
                                   "HARM_CATEGORY_SEXUALLY_EXPLICIT",
                                   "HARM_CATEGORY_DANGEROUS_CONTENT"}) {
        body["safetySettings"].push_back({{"category", category}, {"threshold", "BLOCK_NONE"}});
      }
    }
    const auto response = post_with_retry(
        *transport_,
        {base_ + "/v1beta/models/" + request.model_id + ":generateContent",
         {{"x-goog-api-key", key_}, {"Content-Type", "application/json"}},
         body.dump()},
        retry_);
    const json j = parse_body(response, "gemini");
    const auto& candidates = j.value("candidates", json::array());
    if (candidates.empty()) return "";
    std::string text;
    const auto& parts = candidates[0].value("content", json::object()).value("parts", json::array());
    for (const auto& part : parts) {
      if (part.contains("text") && part["text"].is_string()) text += part["text"].get<std::string>();
    }
    return text;
  }

 private:
  std::shared_ptr<Transport> transport_;
  std::string key_, base_;
  RetryPolicy retry_;
};

class StubProvider final : public Provider {
 public:
  explicit StubProvider(std::function<std::string(const LlmRequest&)> answer)
      : answer_(std::move(answer)) {}
  std::string id() const override { return "stub"; }
  std::string classify(const LlmRequest& request) override { return answer_(request); }

 private:
  std::function<std::string(const LlmRequest&)> answer_;
};

class ReplayProvider final : public Provider {
 public:
  explicit ReplayProvider(const std::filesystem::path& archive) {
    for (auto& r : read_archive(archive)) by_prompt_[r.prompt] = std::move(r.raw);
  }
  std::string id() const override { return "replay"; }
  std::string classify(const LlmRequest& request) override {
    auto it = by_prompt_.find(request.prompt);
    if (it == by_prompt_.end()) {
      throw Error(ErrorCode::kProviderError, "replay archive has no response for this prompt");
    }
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::string> by_prompt_;
};

FailureCensus census_of(const std::vector<LlmVerdict>& verdicts) {
  FailureCensus c;
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto& v : verdicts) {
    ++c.rules[std::string(rule_name(v.rule))];
    switch (v.kind) {
      case VerdictKind::kLabel:
        ++c.labeled;
        ++counts[v.label->index()];
        break;
      case VerdictKind::kNone: ++c.none_marker; break;
      case VerdictKind::kUnparseable: ++c.unparseable; break;
    }
  }
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    if (counts[l]) c.prediction_frequency.emplace_back(Label::from_index(l), counts[l]);
  }
  std::stable_sort(c.prediction_frequency.begin(), c.prediction_frequency.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return c;
}

}  // namespace

std::vector<std::string> prompt_labels() {
  std::vector<std::string> out;
  for (const auto& info : fallacy_labels()) out.push_back(info.display_name);
  return out;
}

std::string build_prompt(std::span<const std::string> labels, std::string_view text) {
  if (trim(text).empty()) throw Error(ErrorCode::kEmptyText, "cannot classify empty text");
  std::string joined;
  for (const auto& l : labels) {
    if (!joined.empty()) joined += ", ";
    joined += l;
  }
  return "Please classify a piece of text into the following categories of logical fallacies: " +
         joined + ". Text: " + std::string(text) + " Label: ";
}

std::string build_prompt(std::string_view text) {
  const auto labels = prompt_labels();
  return build_prompt(labels, text);
}

HttpResponse post_with_retry(Transport& transport, const HttpRequest& request,
                             const RetryPolicy& policy) {
  const std::size_t attempts = std::max<std::size_t>(1, policy.max_attempts);
  ErrorCode last_code = ErrorCode::kProviderError;
  std::string last_message;
  for (std::size_t attempt = 1; attempt <= attempts; ++attempt) {
    std::optional<double> retry_after;
    HttpResponse response;
    try {
      response = transport.post(request);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProviderError) throw;
      response.status = 0;
      last_code = ErrorCode::kProviderError;
      last_message = e.what();
    }
    if (response.status != 0) {
      if (response.status >= 200 && response.status < 300) return response;
      if (response.status == 401 || response.status == 403) {
        throw Error(ErrorCode::kAuthError,
                    "provider rejected credentials (HTTP " + std::to_string(response.status) + ")");
      }
      last_message = "HTTP " + std::to_string(response.status) + ": " + snippet(response.body);
      if (response.status == 429) {
        last_code = ErrorCode::kRateLimited;
      } else if (response.status >= 500 || response.status == 408) {
        last_code = ErrorCode::kProviderError;
      } else {
        throw Error(ErrorCode::kProviderError, last_message);
      }
      retry_after = response.retry_after_seconds;
    }
    if (attempt == attempts) break;
    std::chrono::milliseconds delay = policy.initial_backoff * (1LL << std::min<std::size_t>(attempt - 1, 20));
    if (retry_after) {
      delay = std::chrono::milliseconds(static_cast<long long>(std::ceil(*retry_after * 1000.0)));
    }
    delay = std::min(delay, policy.max_backoff);
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
  throw Error(last_code, "gave up after " + std::to_string(attempts) + " attempts: " + last_message);
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::unique_ptr<Provider> make_openai_provider(std::shared_ptr<Transport> transport,
                                               std::string api_key, std::string base_url,
                                               RetryPolicy retry) {
  return std::make_unique<OpenAiProvider>(std::move(transport), std::move(api_key),
                                          std::move(base_url), std::move(retry));
}

std::unique_ptr<Provider> make_gemini_provider(std::shared_ptr<Transport> transport,
                                               std::string api_key, std::string base_url,
                                               RetryPolicy retry) {
  return std::make_unique<GeminiProvider>(std::move(transport), std::move(api_key),
                                          std::move(base_url), std::move(retry));
}

std::unique_ptr<Provider> make_stub_provider(std::function<std::string(const LlmRequest&)> answer) {
  return std::make_unique<StubProvider>(std::move(answer));
}

std::unique_ptr<Provider> make_replay_provider(const std::filesystem::path& archive) {
  return std::make_unique<ReplayProvider>(archive);
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config,
                                        std::shared_ptr<Transport> transport,
                                        const EnvLookup& env) {
  const std::string& id = config.provider;
  if (id.rfind("stub:", 0) == 0) {
    const std::string answer = id.substr(5);
    return make_stub_provider([answer](const LlmRequest&) { return answer; });
  }
  if (id.rfind("replay:", 0) == 0) return make_replay_provider(id.substr(7));
  if (id != "openai" && id != "gemini") {
    throw Error(ErrorCode::kInvalidArgument, "unknown provider '" + id + "'");
  }
  if (config.model_id.empty()) throw Error(ErrorCode::kInvalidArgument, "model id is empty");
  std::optional<std::string> key;
  if (id == "openai") {
    key = env("OPENAI_API_KEY");
  } else {
    key = env("GEMINI_API_KEY");
    if (!key) key = env("GOOGLE_API_KEY");
  }
  if (!key) {
    throw Error(ErrorCode::kAuthError,
                id == "openai" ? "OPENAI_API_KEY is not set" : "GEMINI_API_KEY is not set");
  }
  if (!transport) transport = make_https_transport();
  if (id == "openai") {
    return make_openai_provider(std::move(transport), *key,
                                config.base_url.value_or("https://api.openai.com"), config.retry);
  }
  return make_gemini_provider(std::move(transport), *key,
                              config.base_url.value_or("https://generativelanguage.googleapis.com"),
                              config.retry);
}

std::string_view rule_name(NormalizationRule rule) {
  switch (rule) {
    case NormalizationRule::kExact: return "exact";
    case NormalizationRule::kLabelSuffix: return "label_suffix";
    case NormalizationRule::kLastSubstring: return "last_substring";
    case NormalizationRule::kNoneMarker: return "none_marker";
    case NormalizationRule::kUnparseable: return "unparseable";
  }
  return "unparseable";
}

NormalizationRule parse_rule(std::string_view name) {
  for (auto r : {NormalizationRule::kExact, NormalizationRule::kLabelSuffix,
                 NormalizationRule::kLastSubstring, NormalizationRule::kNoneMarker,
                 NormalizationRule::kUnparseable}) {
    if (rule_name(r) == name) return r;
  }
  throw Error(ErrorCode::kParseError, "unknown normalization rule '" + std::string(name) + "'");
}

std::string LlmVerdict::normalized() const {
  switch (kind) {
    case VerdictKind::kLabel: return std::string(label->name());
    case VerdictKind::kNone: return std::string(kNoneText);
    case VerdictKind::kUnparseable: return std::string(kUnparseableText);
  }
  return std::string(kUnparseableText);
}

LlmVerdict normalize_response(std::string_view raw) {
  LlmVerdict v;
  v.raw_response = std::string(raw);
  auto labeled = [&](Label l, NormalizationRule rule) {
    v.kind = VerdictKind::kLabel;
    v.label = l;
    v.rule = rule;
    return v;
  };
  auto none = [&](NormalizationRule rule) {
    v.kind = VerdictKind::kNone;
    v.rule = rule;
    return v;
  };

  if (auto l = try_parse_label(strip_decoration(raw))) return labeled(*l, NormalizationRule::kExact);

  const std::string low = lower(raw);
  if (const auto pos = low.rfind("label:"); pos != std::string::npos) {
    const std::string tail = strip_decoration(std::string_view(raw).substr(pos + 6));
    if (!tail.empty()) {
      if (auto l = try_parse_label(tail)) return labeled(*l, NormalizationRule::kLabelSuffix);
      if (is_none_text(tail)) return none(NormalizationRule::kLabelSuffix);
    }
  }

  if (auto l = last_mentioned_label(raw)) return labeled(*l, NormalizationRule::kLastSubstring);
  if (is_none_text(raw)) return none(NormalizationRule::kNoneMarker);
  v.kind = VerdictKind::kUnparseable;
  v.rule = NormalizationRule::kUnparseable;
  return v;
}

json ArchiveRecord::to_json() const {
  return {{"id", id}, {"prompt", prompt}, {"raw", raw}, {"normalized", normalized}, {"rule", rule}};
}

ArchiveRecord ArchiveRecord::from_json(const json& j) {
  try {
    return {j.at("id").get<std::string>(), j.at("prompt").get<std::string>(),
            j.at("raw").get<std::string>(), j.value("normalized", ""), j.value("rule", "")};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("archive record: ") + e.what());
  }
}

std::vector<ArchiveRecord> read_archive(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read archive " + path.string());
  std::vector<ArchiveRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(ArchiveRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError,
                  path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json FailureCensus::to_json() const {
  json freq = json::array();
  for (const auto& [label, n] : prediction_frequency) freq.push_back({{"label", label.name()}, {"count", n}});
  return {{"labeled", labeled},
          {"unlabeled", unlabeled()},
          {"none_marker", none_marker},
          {"unparseable", unparseable},
          {"rules", rules},
          {"prediction_frequency", freq}};
}

std::string FailureCensus::render() const {
  std::ostringstream os;
  os << "labeled " << labeled << ", unlabeled " << unlabeled() << " (none " << none_marker
     << ", unparseable " << unparseable << ")\n";
  os << "rules:";
  for (const auto& [rule, n] : rules) os << ' ' << rule << '=' << n;
  os << "\nmost common predictions:";
  for (std::size_t i = 0; i < prediction_frequency.size(); ++i) {
    os << (i ? ", " : " ") << prediction_frequency[i].first.name() << " ("
       << prediction_frequency[i].second << ')';
  }
  os << '\n';
  return os.str();
}

json LlmEvaluation::to_json() const {
  return {{"report", report.to_json()},
          {"confusion", confusion.to_json()},
          {"census", census.to_json()},
          {"queried", queried},
          {"resumed", resumed}};
}

LlmEvaluation score_archive(const Dataset& test, const std::filesystem::path& archive) {
  std::unordered_map<std::string, ArchiveRecord> by_id;
  for (auto& r : read_archive(archive)) {
    const std::string id = r.id;
    if (!by_id.emplace(id, std::move(r)).second) {
      throw Error(ErrorCode::kDuplicateId, "archive has two records for '" + id + "'");
    }
  }
  LlmEvaluation out;
  std::vector<Label> truth;
  std::vector<metrics::MaybeLabel> predictions;
  for (const auto& s : test.samples) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kInvalidArgument, "archive lacks a verdict for '" + s.id + "'");
    }
    out.verdicts.push_back(normalize_response(it->second.raw));
    truth.push_back(s.label);
    predictions.push_back(out.verdicts.back().prediction());
  }
  out.report = metrics::report(truth, predictions);
  out.confusion = metrics::confusion(truth, predictions);
  out.census = census_of(out.verdicts);
  return out;
}

LlmEvaluation evaluate_llm(const Dataset& test, Provider& provider, const EvaluateOptions& options) {
  if (options.archive.empty()) throw Error(ErrorCode::kInvalidArgument, "an archive path is required");
  if (test.samples.empty()) throw Error(ErrorCode::kEmptyInput, "test set is empty");

  std::unordered_map<std::string, std::string> archived;  // id -> prompt
  if (std::filesystem::exists(options.archive)) {
    for (auto& r : read_archive(options.archive)) archived.emplace(r.id, std::move(r.prompt));
  }
  std::vector<std::pair<std::size_t, std::string>> pending;  // sample index, prompt
  std::size_t resumed = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& s = test.samples[i];
    std::string prompt = build_prompt(s.text);
    auto it = archived.find(s.id);
    if (it == archived.end()) {
      pending.emplace_back(i, std::move(prompt));
    } else if (it->second != prompt) {
      throw Error(ErrorCode::kInvalidArgument,
                  "archived prompt for '" + s.id + "' differs from the current prompt");
    } else {
      ++resumed;
    }
  }

  std::ofstream out(options.archive, std::ios::app);
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + options.archive.string());
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::size_t done = 0;

  auto worker = [&] {
    while (!stop) {
      const std::size_t k = next++;
      if (k >= pending.size()) return;
      const auto& [index, prompt] = pending[k];
      try {
        const std::string raw = provider.classify(
            {provider.id(), options.model_id, prompt, options.temperature,
             options.disable_safety_filters});
        const auto verdict = normalize_response(raw);
        const ArchiveRecord record{test.samples[index].id, prompt, raw, verdict.normalized(),
                                   std::string(rule_name(verdict.rule))};
        std::lock_guard lock(mu);
        out << record.to_json().dump() << '\n' << std::flush;
        ++done;
        if (options.progress) options.progress(resumed + done, test.size());
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(1, options.max_inflight), pending.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  out.close();
  if (failure) std::rethrow_exception(failure);

  auto result = score_archive(test, options.archive);
  result.queried = done;
  result.resumed = resumed;
  return result;
}

}  // namespace flicc::llm
