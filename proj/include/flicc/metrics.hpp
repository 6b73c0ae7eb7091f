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
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flicc/taxonomy.hpp"

namespace flicc::metrics {

// A prediction slot. std::nullopt is an abstention (an unusable LLM answer):
// it is wrong for every class but adds no false positive anywhere.
using MaybeLabel = std::optional<Label>;

struct MetricCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ClassScores {
  MetricCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline constexpr int kReportSchemaVersion = 1;

struct ClassificationReport {
  std::array<ClassScores, kNumLabels> per_class{};
  double accuracy = 0.0;
  Averages macro;
  Averages weighted;
  std::size_t n = 0;
  std::size_t abstained = 0;

  // Two-decimal table in the usual precision/recall/f1/support layout.
  std::string render() const;
  nlohmann::json to_json() const;
};

struct ConfusionMatrix {
  // counts[actual][predicted]
  std::array<std::array<std::size_t, kNumLabels>, kNumLabels> counts{};
  // Abstentions per actual label; row sum + abstained = support.
  std::array<std::size_t, kNumLabels> abstained{};

  std::size_t total() const;
  std::size_t row_sum(std::size_t actual) const;
  std::size_t col_sum(std::size_t predicted) const;
  nlohmann::json to_json() const;
};

using NormalizedMatrix = std::array<std::array<double, kNumLabels>, kNumLabels>;

double accuracy(std::span<const Label> truths, std::span<const Label> predictions);
double accuracy(std::span<const Label> truths, std::span<const MaybeLabel> predictions);

// Zero denominators score 0.
double precision_of(const MetricCounts& c);
double recall_of(const MetricCounts& c);
double f1_of(const MetricCounts& c);

std::array<ClassScores, kNumLabels> per_class_scores(std::span<const Label> truths,
                                                     std::span<const Label> predictions);
std::array<ClassScores, kNumLabels> per_class_scores(std::span<const Label> truths,
                                                     std::span<const MaybeLabel> predictions);

ClassificationReport report(std::span<const Label> truths, std::span<const Label> predictions);
ClassificationReport report(std::span<const Label> truths,
                            std::span<const MaybeLabel> predictions);

ConfusionMatrix confusion(std::span<const Label> truths, std::span<const Label> predictions);
ConfusionMatrix confusion(std::span<const Label> truths,
                          std::span<const MaybeLabel> predictions);

// Each nonzero row divided by its sum (abstentions excluded); zero rows stay zero.
NormalizedMatrix row_normalize(const ConfusionMatrix& matrix);

// Two decimals, empty string where the count is zero.
std::vector<std::string> render_normalized_row(std::span<const std::size_t> counts);
std::string render_normalized(const ConfusionMatrix& matrix);

// Predicts the modal training label; ties go to the canonical order.
class ZeroR {
 public:
  explicit ZeroR(std::span<const Label> train_labels);

  Label label() const { return label_; }
  Label predict() const { return label_; }
  std::vector<Label> predict(std::size_t n) const { return std::vector<Label>(n, label_); }

 private:
  Label label_;
};

ZeroR zero_r(std::span<const Label> train_labels);

}  // namespace flicc::metrics
