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

#include <doctest.h>

#include <atomic>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include "flicc/error.hpp"
#include "flicc/llm_baseline.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace flicc;
using namespace flicc::llm;
using namespace std::chrono_literals;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoError;
}

std::size_t count_ci(const std::string& hay, const std::string& needle) {
  auto low = [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  const std::string h = low(hay), n = low(needle);
  std::size_t count = 0;
  for (auto pos = h.find(n); pos != std::string::npos; pos = h.find(n, pos + 1)) ++count;
  return count;
}

// Replies from a script; an entry with status 0 simulates a dropped connection.
class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(std::deque<HttpResponse> script) : script_(std::move(script)) {}
  HttpResponse post(const HttpRequest& request) override {
    requests.push_back(request);
    REQUIRE(!script_.empty());
    auto r = script_.front();
    script_.pop_front();
    if (r.status == 0) throw Error(ErrorCode::kProviderError, "connection reset");
    return r;
  }
  std::vector<HttpRequest> requests;

 private:
  std::deque<HttpResponse> script_;
};

struct SleepLog {
  std::vector<std::chrono::milliseconds> waits;
  RetryPolicy policy() {
    RetryPolicy p;
    p.sleep = [this](std::chrono::milliseconds d) { waits.push_back(d); };
    return p;
  }
};

Dataset bundled_examples() { return load_dataset(flicc::testing::data_dir() / "table6_examples.jsonl"); }

std::vector<int> truth_indices(const Dataset& ds) {
  std::vector<int> out;
  for (const auto& s : ds.samples) out.push_back(static_cast<int>(s.label.index()));
  return out;
}

}  // namespace

TEST_CASE("prompt follows the published template") {
  const auto prompt = build_prompt("Sea ice is setting records this year.");
  CHECK(prompt.rfind("Please classify a piece of text into the following categories", 0) == 0);
  CHECK(prompt.find("Text: Sea ice is setting records this year. Label: ") != std::string::npos);
  CHECK(prompt.substr(prompt.size() - 7) == "Label: ");
  for (const auto& info : fallacy_labels()) CHECK(count_ci(prompt, info.canonical_name) == 1);
  CHECK(code_of([] { build_prompt(""); }) == ErrorCode::kEmptyText);
  CHECK(code_of([] { build_prompt("  \n"); }) == ErrorCode::kEmptyText);
}

TEST_CASE("response normalization rules") {
  auto v = normalize_response("... the closest interpretation could be cherry picking");
  CHECK(v.kind == VerdictKind::kLabel);
  CHECK(v.label->name() == "cherry picking");
  CHECK(v.rule == NormalizationRule::kLastSubstring);

  v = normalize_response(
      "The provided text does not seem to fall into any of the listed categories ... Label: None");
  CHECK(v.kind == VerdictKind::kNone);
  CHECK_FALSE(v.prediction().has_value());
  CHECK(v.normalized() == "None");

  v = normalize_response("fake experts");
  CHECK(v.label->name() == "fake experts");
  CHECK(v.rule == NormalizationRule::kExact);
  CHECK(normalize_response("  \"Fake Experts.\" ").rule == NormalizationRule::kExact);

  v = normalize_response("This blames one factor.\nLabel: Single Cause");
  CHECK(v.label->name() == "single cause");
  CHECK(v.rule == NormalizationRule::kLabelSuffix);

  v = normalize_response("Could be anecdote, but more likely ad hominem.");
  CHECK(v.label->name() == "ad hominem");
  CHECK(normalize_response("This is cherry-picking").label->name() == "cherry picking");
  CHECK(normalize_response("anecdotes").kind == VerdictKind::kUnparseable);

  CHECK(normalize_response("").rule == NormalizationRule::kNoneMarker);
  CHECK(normalize_response("None of the above.").kind == VerdictKind::kNone);
  CHECK(normalize_response("None").kind == VerdictKind::kNone);
  v = normalize_response("I cannot help with that.");
  CHECK(v.kind == VerdictKind::kUnparseable);
  CHECK(v.normalized() == "Unparseable");

  for (auto r : {NormalizationRule::kExact, NormalizationRule::kLabelSuffix,
                 NormalizationRule::kLastSubstring, NormalizationRule::kNoneMarker,
                 NormalizationRule::kUnparseable}) {
    CHECK(parse_rule(rule_name(r)) == r);
  }
}

TEST_CASE("retries back off exponentially") {
  SUBCASE("429 then 200 succeeds") {
    ScriptedTransport t({{429, "slow down", std::nullopt}, {200, "ok", std::nullopt}});
    SleepLog log;
    CHECK(post_with_retry(t, {"https://x/y", {}, "{}"}, log.policy()).body == "ok");
    CHECK(t.requests.size() == 2);
    CHECK(log.waits == std::vector<std::chrono::milliseconds>{1000ms});
  }
  SUBCASE("persistent 429 gives RateLimited after five attempts") {
    std::deque<HttpResponse> script(5, {429, "", std::nullopt});
    ScriptedTransport t(script);
    SleepLog log;
    CHECK(code_of([&] { post_with_retry(t, {"https://x/y", {}, ""}, log.policy()); }) ==
          ErrorCode::kRateLimited);
    CHECK(t.requests.size() == 5);
    CHECK(log.waits == std::vector<std::chrono::milliseconds>{1000ms, 2000ms, 4000ms, 8000ms});
  }
  SUBCASE("Retry-After and dropped connections") {
    ScriptedTransport t({{503, "", 2.5}, {0, "", std::nullopt}, {200, "done", std::nullopt}});
    SleepLog log;
    CHECK(post_with_retry(t, {"https://x/y", {}, ""}, log.policy()).body == "done");
    CHECK(log.waits == std::vector<std::chrono::milliseconds>{2500ms, 2000ms});
  }
  SUBCASE("client errors are not retried") {
    ScriptedTransport auth({{401, "", std::nullopt}});
    SleepLog log;
    CHECK(code_of([&] { post_with_retry(auth, {"https://x/y", {}, ""}, log.policy()); }) ==
          ErrorCode::kAuthError);
    ScriptedTransport bad({{400, "bad", std::nullopt}});
    CHECK(code_of([&] { post_with_retry(bad, {"https://x/y", {}, ""}, log.policy()); }) ==
          ErrorCode::kProviderError);
    CHECK(log.waits.empty());
  }
  SUBCASE("persistent server errors give ProviderError") {
    std::deque<HttpResponse> script(5, {500, "", std::nullopt});
    ScriptedTransport t(script);
    SleepLog log;
    CHECK(code_of([&] { post_with_retry(t, {"https://x/y", {}, ""}, log.policy()); }) ==
          ErrorCode::kProviderError);
  }
}

TEST_CASE("provider construction and credentials") {
  auto no_env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
  CHECK(code_of([&] { make_provider({"openai", "gpt-4-0125-preview"}, nullptr, no_env); }) ==
        ErrorCode::kAuthError);
  CHECK(code_of([&] { make_provider({"gemini", "gemini-1.0-pro"}, nullptr, no_env); }) ==
        ErrorCode::kAuthError);
  CHECK(code_of([&] { make_provider({"claude-ish", "m"}, nullptr, no_env); }) ==
        ErrorCode::kInvalidArgument);
  auto stub = make_provider({"stub:oversimplification", ""}, nullptr, no_env);
  CHECK(stub->classify({}) == "oversimplification");
}

TEST_CASE("OpenAI request and response shapes") {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{
      {200, R"({"choices":[{"message":{"role":"assistant","content":"Anecdote"}}]})", std::nullopt},
      {200, R"({"choices":[{"message":{"role":"assistant","content":null},"finish_reason":"content_filter"}]})",
       std::nullopt}});
  auto env = [](const std::string& k) -> std::optional<std::string> {
    return k == "OPENAI_API_KEY" ? std::optional<std::string>("sk-test") : std::nullopt;
  };
  ProviderConfig cfg{"openai", "gpt-4-0125-preview"};
  cfg.retry.sleep = [](auto) {};
  auto p = make_provider(cfg, t, env);
  CHECK(p->classify({"openai", "gpt-4-0125-preview", "PROMPT", 0.0, false}) == "Anecdote");
  CHECK(p->classify({"openai", "gpt-4-0125-preview", "PROMPT", 0.0, false}).empty());
  const auto& req = t->requests.at(0);
  CHECK(req.url == "https://api.openai.com/v1/chat/completions");
  const auto body = nlohmann::json::parse(req.body);
  CHECK(body["model"] == "gpt-4-0125-preview");
  CHECK(body["messages"][0]["content"] == "PROMPT");
  CHECK(body["temperature"] == 0.0);
  CHECK(std::find(req.headers.begin(), req.headers.end(),
                  std::pair<std::string, std::string>{"Authorization", "Bearer sk-test"}) !=
        req.headers.end());
}

TEST_CASE("Gemini disables safety filters and maps blocks to empty text") {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{
      {200, R"({"candidates":[{"content":{"parts":[{"text":"Conspiracy "},{"text":"theory"}]}}]})",
       std::nullopt},
      {200, R"({"promptFeedback":{"blockReason":"SAFETY"}})", std::nullopt},
      {200, R"({"candidates":[{"finishReason":"SAFETY"}]})", std::nullopt}});
  auto p = make_gemini_provider(t, "g-key", "https://gen.example", {});
  const LlmRequest req{"gemini", "gemini-1.0-pro", "PROMPT", 0.0, true};
  CHECK(p->classify(req) == "Conspiracy theory");
  CHECK(p->classify(req).empty());
  CHECK(p->classify(req).empty());
  const auto& sent = t->requests.at(0);
  CHECK(sent.url == "https://gen.example/v1beta/models/gemini-1.0-pro:generateContent");
  const auto body = nlohmann::json::parse(sent.body);
  REQUIRE(body["safetySettings"].size() == 4);
  for (const auto& s : body["safetySettings"]) CHECK(s["threshold"] == "BLOCK_NONE");
  CHECK(body["contents"][0]["parts"][0]["text"] == "PROMPT");
}

TEST_CASE("stub providers score like the oracle") {
  const auto test = bundled_examples();
  const auto dir = flicc::testing::scratch_dir("llm_stub");
  auto truthful = make_stub_provider([&](const LlmRequest& r) {
    for (const auto& s : test.samples) {
      if (r.prompt == build_prompt(s.text)) return std::string(s.label.info().display_name);
    }
    return std::string();
  });
  const auto perfect = evaluate_llm(test, *truthful, {dir / "truth.jsonl"});
  CHECK(perfect.report.accuracy == 1.0);
  CHECK(perfect.queried == test.size());

  auto constant = make_stub_provider([](const LlmRequest&) { return std::string("oversimplification"); });
  const auto r = evaluate_llm(test, *constant, {dir / "const.jsonl"});
  const std::vector<int> pred(test.size(), static_cast<int>(parse_label("oversimplification").index()));
  CHECK(flicc::testing::agrees_with_oracle(r.report, r.confusion,
                                           flicc::testing::oracle_report(truth_indices(test), pred)));
  CHECK(r.census.prediction_frequency.size() == 1);
  CHECK(r.census.prediction_frequency[0].second == test.size());
}

TEST_CASE("census counts empty verdicts") {
  Dataset test;
  for (int i = 0; i < 256; ++i) {
    test.samples.push_back({"q" + std::to_string(i), "claim " + std::to_string(i),
                            Label::from_index(static_cast<std::size_t>(i) % kNumLabels),
                            std::nullopt, std::nullopt});
  }
  auto p = make_stub_provider([](const LlmRequest& r) {
    const auto pos = r.prompt.find("Text: claim ");
    const int n = std::stoi(r.prompt.substr(pos + 12));
    return n % 32 == 0 ? std::string() : std::string("Oversimplification");
  });
  const auto dir = flicc::testing::scratch_dir("llm_census");
  EvaluateOptions opt{dir / "a.jsonl"};
  opt.max_inflight = 8;
  const auto r = evaluate_llm(test, *p, opt);
  CHECK(r.census.unlabeled() == 8);
  CHECK(r.census.labeled + r.census.unlabeled() == 256);
  CHECK(r.census.prediction_frequency[0].second == 248);
  CHECK(r.report.abstained == 8);
  CHECK(r.census.render().find("oversimplification (248)") != std::string::npos);
}

TEST_CASE("evaluation resumes from a partial archive") {
  const auto test = bundled_examples();
  const auto dir = flicc::testing::scratch_dir("llm_resume");
  std::atomic<int> calls{0};
  auto flaky = make_stub_provider([&](const LlmRequest&) -> std::string {
    if (++calls > 5) throw Error(ErrorCode::kProviderError, "service down");
    return "Anecdote";
  });
  EvaluateOptions opt{dir / "a.jsonl"};
  opt.max_inflight = 1;
  CHECK(code_of([&] { evaluate_llm(test, *flaky, opt); }) == ErrorCode::kProviderError);
  CHECK(read_archive(opt.archive).size() == 5);

  auto steady = make_stub_provider([](const LlmRequest&) { return std::string("Anecdote"); });
  opt.max_inflight = 4;
  const auto r = evaluate_llm(test, *steady, opt);
  CHECK(r.resumed == 5);
  CHECK(r.queried == test.size() - 5);
  CHECK(read_archive(opt.archive).size() == test.size());
  const auto again = score_archive(test, opt.archive);
  CHECK(again.report.to_json() == r.report.to_json());
}

TEST_CASE("in-flight requests stay under the cap") {
  const auto test = bundled_examples();
  std::atomic<int> active{0}, peak{0};
  auto slow = make_stub_provider([&](const LlmRequest&) {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(20ms);
    --active;
    return std::string("Anecdote");
  });
  const auto dir = flicc::testing::scratch_dir("llm_inflight");
  EvaluateOptions opt{dir / "a.jsonl"};
  opt.max_inflight = 3;
  evaluate_llm(test, *slow, opt);
  CHECK(peak.load() <= 3);
  CHECK(peak.load() >= 2);
}

TEST_CASE("replaying an archive reproduces its verdicts") {
  const auto test = bundled_examples();
  const auto fixture = flicc::testing::fixture_dir() / "llm_replay_archive.jsonl";
  auto replay = make_replay_provider(fixture);
  const auto dir = flicc::testing::scratch_dir("llm_replay");
  const auto r = evaluate_llm(test, *replay, {dir / "replayed.jsonl"});
  const auto archived = read_archive(fixture);
  const auto replayed = read_archive(dir / "replayed.jsonl");
  REQUIRE(archived.size() == test.size());
  std::map<std::string, ArchiveRecord> by_id;
  for (const auto& a : replayed) by_id[a.id] = a;
  for (std::size_t i = 0; i < archived.size(); ++i) {
    CHECK(by_id[archived[i].id].normalized == archived[i].normalized);
    CHECK(by_id[archived[i].id].rule == archived[i].rule);
    CHECK(r.verdicts[i].normalized() == archived[i].normalized);
  }
  CHECK(r.census.none_marker == 3);
  CHECK(r.census.unparseable == 1);
  CHECK(r.census.labeled == 8);
  CHECK(code_of([&] { score_archive(test, flicc::testing::fixture_dir() / "missing.jsonl"); }) ==
        ErrorCode::kIoError);
}
