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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flicc/taxonomy.hpp"

namespace flicc {

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

inline constexpr std::size_t kNumSplits = 3;

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct Sample {
  std::string id;
  std::string text;
  Label label;
  std::optional<std::string> claim;
  std::optional<Split> split;
  // Fields the record format does not know about; written back on save.
  nlohmann::json extra = nlohmann::json::object();
};

struct Dataset {
  std::vector<Sample> samples;
  // Free text, stored as leading `#` comment lines in the file.
  std::string provenance;

  std::size_t size() const { return samples.size(); }
  std::vector<Sample> in_split(Split split) const;
};

// One JSON object per line with keys id, text, label, claim (optional) and
// split (optional). Blank lines are skipped; `#` lines are provenance.
Dataset read_dataset(std::istream& in, std::string_view source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path);

void write_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

nlohmann::json sample_to_json(const Sample& sample);

struct SplitFractions {
  double train = 0.0;
  double val = 0.0;
  double test = 0.0;
};

// Per-label quotas by largest remainder (ties go to the earlier partition),
// then a seeded shuffle decides which samples fill each quota.
std::array<std::size_t, kNumSplits> largest_remainder_quotas(std::size_t count,
                                                             const SplitFractions& fractions);

Dataset stratified_split(const Dataset& dataset, const SplitFractions& fractions,
                         std::uint64_t seed);

struct SplitSummary {
  // counts[label][split]
  std::array<std::array<std::size_t, kNumSplits>, kNumLabels> counts{};

  std::size_t label_total(std::size_t label) const;
  std::size_t split_total(Split split) const;
  std::size_t total() const;

  std::string render() const;
  nlohmann::json to_json() const;
};

SplitSummary split_summary(const Dataset& dataset);

struct CrossTab {
  // Distinct claim codes, sorted.
  std::vector<std::string> claims;
  // counts[label][claim column]
  std::array<std::vector<std::size_t>, kNumLabels> counts;
  // Samples without a claim code.
  std::size_t excluded = 0;

  std::size_t at(Label label, std::string_view claim) const;
  // Row-normalized shares; rows without any count stay zero.
  std::array<std::vector<double>, kNumLabels> row_shares() const;

  std::string render_csv() const;
  nlohmann::json to_json() const;
};

CrossTab cross_tabulate(const Dataset& dataset);

// Removes the listed ids; unknown ids raise InvalidArgument.
Dataset apply_removals(const Dataset& dataset, const std::vector<std::string>& ids);
std::vector<std::string> read_id_list(const std::filesystem::path& path);

}  // namespace flicc
