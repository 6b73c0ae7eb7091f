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

#include "flicc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "flicc/error.hpp"

namespace flicc::metrics {
namespace {

using nlohmann::json;

void check_lengths(std::size_t truths, std::size_t predictions) {
  if (truths != predictions) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(truths) + " truths vs " +
                                                std::to_string(predictions) + " predictions");
  }
}

std::vector<MaybeLabel> widen(std::span<const Label> predictions) {
  return {predictions.begin(), predictions.end()};
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

json averages_json(const Averages& a) {
  return {{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
}

}  // namespace

double precision_of(const MetricCounts& c) {
  const auto d = c.tp + c.fp;
  return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

double recall_of(const MetricCounts& c) {
  const auto d = c.tp + c.fn;
  return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

double f1_of(const MetricCounts& c) {
  const auto d = 2 * c.tp + c.fp + c.fn;
  return d == 0 ? 0.0 : static_cast<double>(2 * c.tp) / static_cast<double>(d);
}

double accuracy(std::span<const Label> truths, std::span<const MaybeLabel> predictions) {
  check_lengths(truths.size(), predictions.size());
  if (truths.empty()) throw Error(ErrorCode::kEmptyInput, "accuracy of an empty evaluation set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (predictions[i] && *predictions[i] == truths[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

double accuracy(std::span<const Label> truths, std::span<const Label> predictions) {
  check_lengths(truths.size(), predictions.size());
  const auto wide = widen(predictions);
  return accuracy(truths, std::span<const MaybeLabel>(wide));
}

std::array<ClassScores, kNumLabels> per_class_scores(std::span<const Label> truths,
                                                     std::span<const MaybeLabel> predictions) {
  check_lengths(truths.size(), predictions.size());
  std::array<ClassScores, kNumLabels> out{};
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto t = truths[i].index();
    ++out[t].support;
    if (predictions[i] && predictions[i]->index() == t) {
      ++out[t].counts.tp;
    } else {
      ++out[t].counts.fn;
      if (predictions[i]) ++out[predictions[i]->index()].counts.fp;
    }
  }
  for (auto& c : out) {
    c.counts.tn = truths.size() - c.counts.tp - c.counts.fp - c.counts.fn;
    c.precision = precision_of(c.counts);
    c.recall = recall_of(c.counts);
    c.f1 = f1_of(c.counts);
  }
  return out;
}

std::array<ClassScores, kNumLabels> per_class_scores(std::span<const Label> truths,
                                                     std::span<const Label> predictions) {
  check_lengths(truths.size(), predictions.size());
  const auto wide = widen(predictions);
  return per_class_scores(truths, std::span<const MaybeLabel>(wide));
}

ClassificationReport report(std::span<const Label> truths,
                            std::span<const MaybeLabel> predictions) {
  ClassificationReport r;
  r.accuracy = accuracy(truths, predictions);
  r.per_class = per_class_scores(truths, predictions);
  r.n = truths.size();
  r.abstained = static_cast<std::size_t>(
      std::count(predictions.begin(), predictions.end(), std::nullopt));
  const double n = static_cast<double>(r.n);
  for (const auto& c : r.per_class) {
    r.macro.precision += c.precision / kNumLabels;
    r.macro.recall += c.recall / kNumLabels;
    r.macro.f1 += c.f1 / kNumLabels;
    const double w = static_cast<double>(c.support) / n;
    r.weighted.precision += w * c.precision;
    r.weighted.recall += w * c.recall;
    r.weighted.f1 += w * c.f1;
  }
  return r;
}

ClassificationReport report(std::span<const Label> truths, std::span<const Label> predictions) {
  check_lengths(truths.size(), predictions.size());
  const auto wide = widen(predictions);
  return report(truths, std::span<const MaybeLabel>(wide));
}

std::string ClassificationReport::render() const {
  std::ostringstream os;
  os << std::setw(25) << "" << std::setw(11) << "precision" << std::setw(10) << "recall"
     << std::setw(10) << "f1-score" << std::setw(10) << "support" << "\n\n";
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    const auto& c = per_class[l];
    os << std::setw(25) << Label::from_index(l).name() << std::setw(11) << fixed2(c.precision)
       << std::setw(10) << fixed2(c.recall) << std::setw(10) << fixed2(c.f1) << std::setw(10)
       << c.support << '\n';
  }
  os << '\n'
     << std::setw(25) << "accuracy" << std::setw(31) << fixed2(accuracy) << std::setw(10) << n
     << '\n';
  os << std::setw(25) << "macro avg" << std::setw(11) << fixed2(macro.precision) << std::setw(10)
     << fixed2(macro.recall) << std::setw(10) << fixed2(macro.f1) << std::setw(10) << n << '\n';
  os << std::setw(25) << "weighted avg" << std::setw(11) << fixed2(weighted.precision)
     << std::setw(10) << fixed2(weighted.recall) << std::setw(10) << fixed2(weighted.f1)
     << std::setw(10) << n << '\n';
  if (abstained > 0) os << "\n" << abstained << " of " << n << " predictions abstained\n";
  return os.str();
}

json ClassificationReport::to_json() const {
  json classes = json::array();
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    const auto& c = per_class[l];
    classes.push_back({{"label", Label::from_index(l).name()},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1},
                       {"support", c.support},
                       {"tp", c.counts.tp},
                       {"fp", c.counts.fp},
                       {"fn", c.counts.fn},
                       {"tn", c.counts.tn}});
  }
  return {{"schema", "flicc.classification_report"},
          {"version", kReportSchemaVersion},
          {"classes", classes},
          {"accuracy", accuracy},
          {"macro_avg", averages_json(macro)},
          {"weighted_avg", averages_json(weighted)},
          {"n", n},
          {"abstained", abstained}};
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < kNumLabels; ++i) t += row_sum(i) + abstained[i];
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t actual) const {
  const auto& row = counts.at(actual);
  return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::size_t s = 0;
  for (const auto& row : counts) s += row.at(predicted);
  return s;
}

json ConfusionMatrix::to_json() const {
  json labels = json::array();
  for (const auto& l : fallacy_labels()) labels.push_back(l.canonical_name);
  return {{"labels", labels}, {"counts", counts}, {"abstained", abstained}};
}

ConfusionMatrix confusion(std::span<const Label> truths,
                          std::span<const MaybeLabel> predictions) {
  check_lengths(truths.size(), predictions.size());
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (predictions[i]) {
      ++m.counts[truths[i].index()][predictions[i]->index()];
    } else {
      ++m.abstained[truths[i].index()];
    }
  }
  return m;
}

ConfusionMatrix confusion(std::span<const Label> truths, std::span<const Label> predictions) {
  check_lengths(truths.size(), predictions.size());
  const auto wide = widen(predictions);
  return confusion(truths, std::span<const MaybeLabel>(wide));
}

NormalizedMatrix row_normalize(const ConfusionMatrix& matrix) {
  NormalizedMatrix out{};
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const double sum = static_cast<double>(matrix.row_sum(i));
    if (sum == 0) continue;
    for (std::size_t j = 0; j < kNumLabels; ++j) {
      out[i][j] = static_cast<double>(matrix.counts[i][j]) / sum;
    }
  }
  return out;
}

std::vector<std::string> render_normalized_row(std::span<const std::size_t> counts) {
  const double sum = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<std::string> cells;
  cells.reserve(counts.size());
  for (auto c : counts) {
    cells.push_back(c == 0 ? std::string() : fixed2(static_cast<double>(c) / sum));
  }
  return cells;
}

std::string render_normalized(const ConfusionMatrix& matrix) {
  std::ostringstream os;
  os << std::setw(25) << "actual \\ predicted";
  for (std::size_t j = 0; j < kNumLabels; ++j) os << std::setw(6) << j;
  os << '\n';
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    os << std::setw(25) << Label::from_index(i).name();
    for (const auto& cell : render_normalized_row(matrix.counts[i])) os << std::setw(6) << cell;
    os << '\n';
  }
  os << "\ncolumns: ";
  for (std::size_t j = 0; j < kNumLabels; ++j) {
    os << (j ? ", " : "") << j << "=" << Label::from_index(j).name();
  }
  os << '\n';
  return os.str();
}

ZeroR::ZeroR(std::span<const Label> train_labels) : label_(Label::from_index(0)) {
  if (train_labels.empty()) throw Error(ErrorCode::kEmptyInput, "ZeroR needs training labels");
  std::array<std::size_t, kNumLabels> freq{};
  for (auto l : train_labels) ++freq[l.index()];
  // max_element returns the first maximum, i.e. the canonical tie-break.
  label_ = Label::from_index(
      static_cast<std::size_t>(std::max_element(freq.begin(), freq.end()) - freq.begin()));
}

ZeroR zero_r(std::span<const Label> train_labels) { return ZeroR(train_labels); }

}  // namespace flicc::metrics
