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

#include "flicc/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "flicc/error.hpp"
#include "taxonomy_data.inc"

namespace flicc {
namespace {

using nlohmann::json;

struct Tables {
  int version = 0;
  std::vector<FallacyLabel> labels;
  std::vector<CardsClaim> claims;
};

FallacyType parse_type(const std::string& s) {
  if (s == "structural") return FallacyType::kStructural;
  if (s == "background_knowledge") return FallacyType::kBackgroundKnowledge;
  throw Error(ErrorCode::kParseError, "taxonomy: unknown fallacy_type '" + s + "'");
}

Tables load_tables() {
  Tables t;
  std::istringstream in{std::string(kTaxonomyData)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (header) {
      t.version = j.at("version").get<int>();
      header = false;
      continue;
    }
    FallacyLabel label{j.at("canonical_name").get<std::string>(),
                       j.at("display_name").get<std::string>(),
                       parse_type(j.at("fallacy_type").get<std::string>()),
                       j.at("definition").get<std::string>(),
                       std::nullopt};
    if (j.contains("argument_structure")) {
      label.argument_structure = j["argument_structure"].get<std::string>();
    }
    t.labels.push_back(std::move(label));
  }
  std::sort(t.labels.begin(), t.labels.end(),
            [](const auto& a, const auto& b) { return a.canonical_name < b.canonical_name; });
  if (t.labels.size() != kNumLabels) {
    throw Error(ErrorCode::kParseError, "taxonomy: expected 12 labels");
  }

  std::istringstream cin{std::string(kCardsData)};
  header = true;
  while (std::getline(cin, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (header) {
      header = false;
      continue;
    }
    t.claims.push_back({j.at("code").get<std::string>(), j.at("description").get<std::string>()});
  }
  return t;
}

const Tables& tables() {
  static const Tables t = load_tables();
  return t;
}

}  // namespace

std::string_view fallacy_type_name(FallacyType type) {
  return type == FallacyType::kStructural ? "structural" : "background_knowledge";
}

Label Label::from_index(std::size_t index) {
  if (index >= kNumLabels) {
    throw Error(ErrorCode::kUnknownLabel, "label index " + std::to_string(index) + " out of range");
  }
  return Label(index);
}

const FallacyLabel& Label::info() const { return tables().labels[index_]; }

std::span<const FallacyLabel> fallacy_labels() { return tables().labels; }

std::array<Label, kNumLabels> all_labels() {
  std::array<Label, kNumLabels> out{
      Label::from_index(0), Label::from_index(1), Label::from_index(2),
      Label::from_index(3), Label::from_index(4), Label::from_index(5),
      Label::from_index(6), Label::from_index(7), Label::from_index(8),
      Label::from_index(9), Label::from_index(10), Label::from_index(11)};
  return out;
}

std::string normalize_label_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  constexpr std::string_view kTerminal = ".,;:!?";
  while (!out.empty() &&
         (kTerminal.find(out.back()) != std::string_view::npos || out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

std::optional<Label> try_parse_label(std::string_view raw) {
  const std::string norm = normalize_label_text(raw);
  const auto& labels = tables().labels;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].canonical_name == norm) return Label::from_index(i);
  }
  return std::nullopt;
}

Label parse_label(std::string_view raw) {
  if (auto label = try_parse_label(raw)) return *label;
  throw Error(ErrorCode::kUnknownLabel, "'" + std::string(raw) + "' is not a FLICC label");
}

const FallacyLabel& label_info(Label label) { return label.info(); }

int taxonomy_version() { return tables().version; }

std::string_view taxonomy_data() { return kTaxonomyData; }

std::span<const CardsClaim> cards_claims() { return tables().claims; }

bool is_claim_code(std::string_view code) {
  return code.size() == 3 && std::isdigit(static_cast<unsigned char>(code[0])) &&
         code[1] == '.' && std::isdigit(static_cast<unsigned char>(code[2]));
}

std::optional<CardsClaim> find_claim(std::string_view code) {
  for (const auto& c : tables().claims) {
    if (c.code == code) return c;
  }
  return std::nullopt;
}

}  // namespace flicc
