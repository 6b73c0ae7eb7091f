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
#include <cctype>
#include <iterator>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "flicc/corpus.hpp"
#include "flicc/random.hpp"
#include "flicc/taxonomy.hpp"

namespace flicc::testing {

inline std::filesystem::path data_dir() {
  if (const char* d = std::getenv("FLICC_DATA_DIR")) return d;
  return std::filesystem::path(__FILE__).parent_path().parent_path() / "data";
}

inline std::filesystem::path fixture_dir() {
  return std::filesystem::path(__FILE__).parent_path() / "fixtures";
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("flicc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Partition sizes per label as published (train, val, test), canonical order.
inline constexpr std::array<std::array<std::size_t, 3>, kNumLabels> kReferenceSplit = {{
    {264, 67, 37},
    {170, 43, 24},
    {222, 56, 31},
    {154, 39, 22},
    {44, 12, 7},
    {48, 13, 7},
    {52, 14, 8},
    {144, 37, 21},
    {151, 38, 22},
    {143, 36, 20},
    {226, 57, 32},
    {178, 45, 25},
}};

inline std::size_t reference_total(std::size_t label) {
  return kReferenceSplit[label][0] + kReferenceSplit[label][1] + kReferenceSplit[label][2];
}

// Labels of one published partition, grouped by label in canonical order.
inline std::vector<Label> reference_split_labels(Split split) {
  std::vector<Label> out;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    out.insert(out.end(), kReferenceSplit[l][static_cast<std::size_t>(split)], Label::from_index(l));
  }
  return out;
}

// A 2509-sample dataset with the published per-label totals and no split tags.
inline Dataset reference_split_dataset() {
  Dataset ds;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    for (std::size_t i = 0; i < reference_total(l); ++i) {
      ds.samples.push_back({"s" + std::to_string(l) + "-" + std::to_string(i),
                            "sample text " + std::to_string(i), Label::from_index(l),
                            std::nullopt, std::nullopt});
    }
  }
  return ds;
}

inline std::vector<Label> random_labels(Rng& rng, std::size_t n) {
  std::vector<Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Label::from_index(rng.below(kNumLabels)));
  return out;
}

// Balanced synthetic set of `total` samples with labels dealt round robin.
// Each text mixes words from its label's definition with shared filler, so
// classes are separable but not trivially so.
inline Dataset balanced_synthetic(std::size_t total, std::uint64_t seed) {
  static const char* kFiller[] = {"the", "climate", "is", "and", "we", "they", "really",
                                  "data", "people", "say", "about", "world", "warming", "this"};
  Rng rng(seed);
  Dataset ds;
  for (std::size_t i = 0; i < total; ++i) {
    const auto label = Label::from_index(i % kNumLabels);
    std::vector<std::string> words;
    std::string current;
    for (char c : std::string(label.info().definition) + ' ') {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else if (!current.empty()) {
        if (current.size() > 3) words.push_back(current);
        current.clear();
      }
    }
    std::string text;
    for (int k = 0; k < 10; ++k) {
      if (!text.empty()) text += ' ';
      text += k % 3 == 2 ? kFiller[rng.below(std::size(kFiller))] : words[rng.below(words.size())];
    }
    ds.samples.push_back({"syn-" + std::to_string(i), text, label, std::nullopt, std::nullopt});
  }
  return ds;
}

}  // namespace flicc::testing
