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

// Acceptance checks. `flicc_acceptance <name>` runs one criterion and prints a
// single PASS or FAIL line; `flicc_acceptance all` runs every criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flicc/corpus.hpp"
#include "flicc/curation.hpp"
#include "flicc/error.hpp"
#include "flicc/llm_baseline.hpp"
#include "flicc/loss.hpp"
#include "flicc/metrics.hpp"
#include "flicc/random.hpp"
#include "flicc/training.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace flicc;

namespace {

// Tolerances and budgets.
constexpr double kZeroRAccuracy = 0.1445, kZeroRAccuracyTol = 0.0005;
constexpr double kZeroRMacroF1 = 0.021, kZeroRMacroF1Tol = 0.001;
constexpr std::size_t kOracleTrials = 250;
constexpr long kSplitCellTol = 1;
constexpr double kCrossEntropyTol = 1e-9;
constexpr double kGradientRelTol = 1e-4;
constexpr double kFocalReference = 0.00105361, kFocalReferenceTol = 1e-8;
constexpr double kArithmeticTol = 1e-9;
constexpr double kExpandedRelTol = 1e-6;
constexpr double kNearDupCosine = 0.95;
constexpr std::size_t kNearDupTop = 5;
constexpr double kRowSumTol = 0.01;
constexpr double kSmokeF1 = 0.95;
constexpr std::size_t kSmokeEpochs = 30;
constexpr double kDeskF1 = 0.50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

Outcome outcome(bool pass, std::string detail) { return {pass, std::move(detail)}; }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Outcome zero_r_baseline() {
  const auto train = testing::reference_split_labels(Split::kTrain);
  const auto test = testing::reference_split_labels(Split::kTest);
  if (test.size() != 256) return outcome(false, fmt("test partition has %zu labels", test.size()));
  const auto pred = metrics::zero_r(train).predict(test.size());
  const auto r = metrics::report(test, pred);
  const bool ok = std::abs(r.accuracy - kZeroRAccuracy) <= kZeroRAccuracyTol &&
                  std::abs(r.macro.f1 - kZeroRMacroF1) <= kZeroRMacroF1Tol;
  return outcome(ok, fmt("accuracy %.4f (reported 0.14), macro F1 %.4f (reported 0.02)", r.accuracy,
                         r.macro.f1));
}

Outcome metrics_oracle() {
  Rng rng(2026);
  std::size_t agreed = 0;
  for (std::size_t trial = 0; trial < kOracleTrials; ++trial) {
    const std::size_t n = 12 + rng.below(489);
    const bool abstain = trial % 4 == 3;
    std::vector<Label> truth;
    std::vector<metrics::MaybeLabel> pred;
    std::vector<int> ot, op;
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = rng.below(kNumLabels);
      truth.push_back(Label::from_index(t));
      ot.push_back(static_cast<int>(t));
      if (abstain && rng.below(10) == 0) {
        pred.emplace_back(std::nullopt);
        op.push_back(-1);
      } else {
        // Bias toward the truth so every cell type occurs.
        const auto p = rng.below(3) == 0 ? t : rng.below(kNumLabels);
        pred.emplace_back(Label::from_index(p));
        op.push_back(static_cast<int>(p));
      }
    }
    const auto r = metrics::report(truth, pred);
    const auto m = metrics::confusion(truth, pred);
    if (testing::agrees_with_oracle(r, m, testing::oracle_report(ot, op))) ++agreed;
  }
  return outcome(agreed == kOracleTrials, fmt("%zu/%zu trials equal the oracle", agreed, kOracleTrials));
}

Outcome reference_split() {
  const auto ds = testing::reference_split_dataset();
  const auto split = stratified_split(ds, {1796.0 / 2509, 457.0 / 2509, 256.0 / 2509}, 0);
  const auto summary = split_summary(split);
  long worst = 0;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    for (std::size_t k = 0; k < kNumSplits; ++k) {
      const long diff = static_cast<long>(summary.counts[l][k]) -
                        static_cast<long>(testing::kReferenceSplit[l][k]);
      worst = std::max(worst, std::abs(diff));
    }
  }
  return outcome(ds.size() == 2509 && worst <= kSplitCellTol,
                 fmt("%zu samples, largest cell deviation %ld", ds.size(), worst));
}

Outcome focal_properties() {
  Rng rng(7);
  double worst_ce = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(kNumLabels);
    double sum = 0;
    for (auto& v : p) sum += (v = -std::log(1.0 - rng.uniform()));
    for (auto& v : p) v /= sum;
    const auto t = rng.below(kNumLabels);
    worst_ce = std::max(worst_ce, std::abs(focal_loss(p, t, 0.0) - (-std::log(p[t]))));
  }
  double worst_grad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd z(kNumLabels);
    for (long i = 0; i < z.size(); ++i) z[i] = rng.normal(0, 2);
    const auto t = rng.below(kNumLabels);
    const double gamma = std::vector<double>{0, 0.5, 2, 4, 8, 12}[trial % 6];
    const auto g = focal_loss_from_logits(z, t, gamma);
    // Central differences; at this step truncation and round-off both stay near 1e-8.
    const double h = 1e-4;
    for (long i = 0; i < z.size(); ++i) {
      Eigen::VectorXd up = z, down = z;
      up[i] += h;
      down[i] -= h;
      const double numeric = (focal_loss_from_logits(up, t, gamma).loss -
                              focal_loss_from_logits(down, t, gamma).loss) / (2 * h);
      // Components far below the loss scale are judged absolutely.
      const double scale = std::max({std::abs(numeric), std::abs(g.grad[i]), 1e-6});
      worst_grad = std::max(worst_grad, std::abs(numeric - g.grad[i]) / scale);
    }
  }
  const std::vector<double> p{0.9, 0.1};
  const double ref = focal_loss(p, 0, 2.0);
  const bool ok = worst_ce <= kCrossEntropyTol && worst_grad <= kGradientRelTol &&
                  std::abs(ref - kFocalReference) <= kFocalReferenceTol;
  return outcome(ok, fmt("gamma 0 vs CE %.1e, gradient rel err %.1e, FL(0.9; 2) = %.8f", worst_ce,
                         worst_grad, ref));
}

Outcome similarity_arithmetic() {
  using curation::cosine_similarity;
  using curation::expanded_euclidean_distance;
  const std::vector<double> a{1, 2, 3}, b{1, 2, 3}, x{1, 0}, y{0, 1}, u{1, 2}, v{2, 1};
  const std::vector<double> p0{0, 0}, q0{3, 4};
  double worst = 0;
  worst = std::max(worst, std::abs(cosine_similarity(a, b) - 1.0));
  worst = std::max(worst, std::abs(cosine_similarity(x, y) - 0.0));
  // (1*2 + 2*1) / (sqrt(5) * sqrt(5)) = 0.8
  worst = std::max(worst, std::abs(cosine_similarity(u, v) - 0.8));
  worst = std::max(worst, std::abs(expanded_euclidean_distance(q0, q0) - 0.0));
  worst = std::max(worst, std::abs(expanded_euclidean_distance(p0, q0) - 5.0));

  Rng rng(11);
  double worst_rel = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 1 + rng.below(64);
    std::vector<double> p(d), q(d);
    double direct = 0;
    for (std::size_t k = 0; k < d; ++k) {
      p[k] = rng.normal();
      q[k] = rng.normal();
      direct += (p[k] - q[k]) * (p[k] - q[k]);
    }
    direct = std::sqrt(direct);
    worst_rel = std::max(worst_rel, std::abs(expanded_euclidean_distance(p, q) - direct) / direct);
  }
  return outcome(worst <= kArithmeticTol && worst_rel <= kExpandedRelTol,
                 fmt("worst example error %.1e, expanded vs direct rel err %.1e", worst, worst_rel));
}

Outcome curation_oracle() {
  // Background: the bundled example texts, definitions and claim descriptions.
  Dataset ds = load_dataset(testing::data_dir() / "table6_examples.jsonl");
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    const auto label = Label::from_index(l);
    ds.samples.push_back({"def-" + std::to_string(l), std::string(label.info().definition), label,
                          std::nullopt, std::nullopt});
  }
  auto add = [&](std::string id, std::string text) {
    ds.samples.push_back({std::move(id), std::move(text), parse_label("anecdote"), std::nullopt,
                          std::nullopt});
  };
  add("exact-a1", "Polar bears are thriving, so the warming story is exaggerated.");
  add("exact-a2", "Polar bears are thriving, so the warming story is exaggerated.");
  add("exact-b1", "My town had snow in May, global warming is over.");
  add("exact-b2", "My town had snow in May, global warming is over.");
  add("var-a1", "Climate models have been wrong before so they are useless");
  add("var-a2", "climate models have been wrong before, so they are useless!");
  add("var-b1", "CO2 is plant food and therefore harmless");
  add("var-b2", "CO2 is plant food, and therefore harmless.");

  const auto groups = curation::exact_duplicates(ds);
  const bool grouped =
      groups == std::vector<std::vector<std::string>>{{"exact-a1", "exact-a2"}, {"exact-b1", "exact-b2"}};

  const auto emb = curation::embed(ds, curation::EncoderConfig{});
  const auto pairs = curation::near_duplicate_pairs(emb, {std::nullopt, kNearDupTop});
  auto in_top = [&](const std::string& a, const std::string& b) {
    for (const auto& p : pairs) {
      const auto& ids = p.sample_ids;
      if (((ids[0] == a && ids[1] == b) || (ids[0] == b && ids[1] == a)) && p.score >= kNearDupCosine) {
        return true;
      }
    }
    return false;
  };
  const bool variants = in_top("var-a1", "var-a2") && in_top("var-b1", "var-b2");

  // Synthetic 100-point cluster with one far point.
  Rng rng(3);
  Dataset cluster;
  std::vector<curation::Embedding> points;
  for (int i = 0; i <= 100; ++i) {
    const std::string id = i == 100 ? "far" : "p" + std::to_string(i);
    cluster.samples.push_back({id, "t", parse_label("anecdote"), std::nullopt, std::nullopt});
    std::vector<double> v(8);
    for (auto& c : v) c = i == 100 ? 12.0 : rng.normal(0, 0.5);
    points.push_back({id, v});
  }
  const auto ranked = curation::centroid_distances(cluster, points);
  const auto forest = curation::forest_outliers(points, 0.01, 5);
  const bool centroid_first = ranked.front().sample_id == "far";
  const bool forest_flags = forest.flagged.size() == 1 && forest.flagged[0].sample_ids[0] == "far";

  return outcome(grouped && variants && centroid_first && forest_flags,
                 fmt("exact groups %s, variants in top-%zu %s, centroid rank 1 %s, forest flag %s",
                     grouped ? "ok" : "wrong", kNearDupTop, variants ? "ok" : "missing",
                     centroid_first ? "far" : ranked.front().sample_id.c_str(),
                     forest_flags ? "far" : "wrong"));
}

Outcome confusion_rendering() {
  const std::array<std::size_t, kNumLabels> row{29, 0, 1, 4, 0, 0, 0, 1, 1, 0, 0, 1};
  const std::vector<std::string> want{"0.78", "", "0.03", "0.11", "", "", "", "0.03", "0.03",
                                      "", "", "0.03"};
  const auto cells = metrics::render_normalized_row(row);
  // Every row of a random matrix must sum to one after rounding.
  Rng rng(4);
  metrics::ConfusionMatrix m;
  m.counts[0] = row;
  for (std::size_t r = 1; r < kNumLabels; ++r) {
    for (auto& c : m.counts[r]) c = rng.below(3) == 0 ? rng.below(40) : 0;
    m.counts[r][r] += 1;
  }
  const auto n = metrics::row_normalize(m);
  double worst = 0;
  for (const auto& r : n) {
    double sum = 0;
    for (double v : r) sum += std::round(v * 100) / 100;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  std::string rendered;
  for (const auto& c : cells) rendered += (rendered.empty() ? "" : ",") + c;
  return outcome(cells == want && worst <= kRowSumTol + 1e-12,
                 fmt("ad hominem row (%s), worst rounded row sum error %.3f", rendered.c_str(), worst));
}

Outcome training_smoke() {
  std::size_t calls = 0;
  const std::vector<double> seq{0.50, 0.60, 0.59, 0.58, 0.57};
  const auto loop = training::run_epoch_loop(30, 3, [&](std::size_t epoch) {
    ++calls;
    return training::EpochRecord{epoch, 1.0, seq.at(std::min(epoch, seq.size()) - 1), 0.0, 0.0};
  });
  const bool stops = calls == 5 && loop.best_epoch == 2;

  const auto data = testing::balanced_synthetic(64, 8);
  training::TrainConfig c;
  c.checkpoint_id = "flicc-encoder-base";
  c.learning_rate = 1e-4;
  c.batch_size = 8;
  c.max_epochs = kSmokeEpochs;
  c.patience = kSmokeEpochs;
  c.seed = 8;
  SequenceClassifier model(*find_architecture("flicc-encoder-tiny"), kNumLabels, 0);
  const auto r = training::fine_tune(c, data, data, {}, &model);
  const double train_f1 = training::evaluate(model, data).macro.f1;
  std::size_t reached = 0;
  for (const auto& e : r.history) {
    if (e.val_f1_macro >= kSmokeF1) {
      reached = e.epoch;
      break;
    }
  }
  return outcome(stops && train_f1 >= kSmokeF1 && reached > 0,
                 fmt("early stop after %zu epochs (best %zu); base train F1-macro %.3f, first >= %.2f at "
                     "epoch %zu",
                     calls, loop.best_epoch, train_f1, kSmokeF1, reached));
}

Outcome desk_scale() {
  const char* path = std::getenv("FLICC_DATASET");
  if (path == nullptr || *path == '\0') {
    return outcome(false, "FLICC_DATASET is unset; the 2509-sample corpus is not distributed with the repo");
  }
  Dataset data = load_dataset(path);
  const bool tagged = std::all_of(data.samples.begin(), data.samples.end(),
                                  [](const Sample& s) { return s.split.has_value(); });
  if (!tagged) data = stratified_split(data, {1796.0 / 2509, 457.0 / 2509, 256.0 / 2509}, 0);
  Dataset train, val;
  train.samples = data.in_split(Split::kTrain);
  val.samples = data.in_split(Split::kVal);
  training::SweepPlan plan = training::SweepPlan::paper();
  plan.weight_decays.clear();
  plan.lora.clear();
  training::TrainConfig base;
  base.checkpoint_id = "flicc-encoder-base";
  const auto result = training::sweep(plan, base, [&](const training::TrainConfig& c) {
    std::fprintf(stderr, "desk_scale: %s\n", c.run_name().c_str());
    return training::fine_tune(c, train, val);
  });
  const auto& best = result.best();
  return outcome(best.best_val_f1_macro >= kDeskF1,
                 fmt("%zu samples, best %s val F1-macro %.3f (threshold %.2f)", data.size(),
                     best.config.run_name().c_str(), best.best_val_f1_macro, kDeskF1));
}

Outcome llm_replay() {
  const auto test = load_dataset(testing::data_dir() / "table6_examples.jsonl");
  const auto fixture = testing::fixture_dir() / "llm_replay_archive.jsonl";
  const auto archive = testing::scratch_dir("acceptance_llm") / "replayed.jsonl";
  auto provider = llm::make_replay_provider(fixture);
  const auto r = llm::evaluate_llm(test, *provider, {archive});

  std::map<std::string, std::string> got;
  for (std::size_t i = 0; i < test.size(); ++i) got[test.samples[i].id] = r.verdicts[i].normalized();
  const bool quoted = got["t6-01"] == "cherry picking" && got["t6-02"] == "None" && got["t6-03"] == "None";

  // Census recomputed straight from the archived verdicts.
  std::size_t none = 0, unparseable = 0, labeled = 0;
  std::vector<int> truth, pred;
  std::map<std::string, std::string> archived;
  for (const auto& a : llm::read_archive(fixture)) archived[a.id] = a.normalized;
  for (const auto& s : test.samples) {
    const auto& v = archived.at(s.id);
    truth.push_back(static_cast<int>(s.label.index()));
    if (v == "None") {
      ++none;
      pred.push_back(-1);
    } else if (v == "Unparseable") {
      ++unparseable;
      pred.push_back(-1);
    } else {
      ++labeled;
      pred.push_back(static_cast<int>(parse_label(v).index()));
    }
  }
  const bool census = r.census.none_marker == none && r.census.unparseable == unparseable &&
                      r.census.labeled == labeled;
  const bool scored = testing::agrees_with_oracle(r.report, r.confusion, testing::oracle_report(truth, pred));
  return outcome(quoted && census && scored,
                 fmt("quoted failure modes %s, census none %zu unparseable %zu labeled %zu, report %s",
                     quoted ? "resolved" : "wrong", r.census.none_marker, r.census.unparseable,
                     r.census.labeled, scored ? "equals oracle" : "differs from oracle"));
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"zero_r_baseline", 1, zero_r_baseline},
      {"metrics_oracle", 10, metrics_oracle},
      {"reference_split", 1, reference_split},
      {"focal_loss_properties", 10, focal_properties},
      {"similarity_arithmetic", 5, similarity_arithmetic},
      {"curation_oracle", 120, curation_oracle},
      {"confusion_rendering", 1, confusion_rendering},
      {"training_smoke", 2 * 3600, training_smoke},
      {"desk_scale_quality", 2 * 3600, desk_scale},
      {"llm_protocol_replay", 5, llm_replay},
  };
  return all;
}

bool run(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = outcome(false, std::string("error: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_budget = secs <= c.budget_seconds;
  const bool pass = o.pass && in_budget;
  std::printf("%s %s: %s [%.2fs of %.0fs]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
              c.budget_seconds);
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <criterion|all|--list>\n", argv[0]);
    return 2;
  }
  const std::string want = argv[1];
  if (want == "--list") {
    for (const auto& c : criteria()) std::printf("%s\n", c.name);
    return 0;
  }
  bool ok = true, found = false;
  for (const auto& c : criteria()) {
    if (want == "all" || want == c.name) {
      found = true;
      ok = run(c) && ok;
    }
  }
  if (!found) {
    std::fprintf(stderr, "unknown criterion '%s'\n", want.c_str());
    return 2;
  }
  return ok ? 0 : 1;
}
