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
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace flicc {

inline constexpr std::size_t kNumLabels = 12;

enum class FallacyType { kStructural, kBackgroundKnowledge };

std::string_view fallacy_type_name(FallacyType type);

// One row of the fallacy reference table.
struct FallacyLabel {
  std::string canonical_name;
  std::string display_name;
  FallacyType fallacy_type;
  std::string definition;
  std::optional<std::string> argument_structure;
};

// Handle to one of the twelve labels. The index is the position in the
// canonical (ascending lexicographic) order used by every report and matrix.
class Label {
 public:
  static Label from_index(std::size_t index);

  std::size_t index() const noexcept { return index_; }
  const FallacyLabel& info() const;
  std::string_view name() const { return info().canonical_name; }

  auto operator<=>(const Label&) const = default;

 private:
  explicit constexpr Label(std::size_t index) : index_(index) {}
  std::size_t index_ = 0;
};

// The twelve labels in canonical order.
std::span<const FallacyLabel> fallacy_labels();

// All labels as handles, canonical order.
std::array<Label, kNumLabels> all_labels();

// Lowercase, trim, collapse internal whitespace and strip trailing
// `. , ; : ! ?`. Non-ASCII bytes pass through untouched.
std::string normalize_label_text(std::string_view raw);

// Throws Error(kUnknownLabel) when nothing matches after normalization.
Label parse_label(std::string_view raw);
std::optional<Label> try_parse_label(std::string_view raw);

const FallacyLabel& label_info(Label label);

// Version of the embedded taxonomy data file.
int taxonomy_version();

// Raw embedded data file, one JSON record per line (header first).
std::string_view taxonomy_data();

struct CardsClaim {
  std::string code;
  std::string description;
};

std::span<const CardsClaim> cards_claims();

// True for codes of the form "<digit>.<digit>".
bool is_claim_code(std::string_view code);

std::optional<CardsClaim> find_claim(std::string_view code);

}  // namespace flicc
