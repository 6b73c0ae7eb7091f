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

#include <algorithm>
#include <set>

#include "flicc/error.hpp"
#include "flicc/taxonomy.hpp"

using namespace flicc;

TEST_CASE("twelve labels in alphabetical order") {
  const auto labels = fallacy_labels();
  REQUIRE(labels.size() == 12);
  CHECK(labels.front().canonical_name == "ad hominem");
  CHECK(labels.back().canonical_name == "slothful induction");
  CHECK(std::is_sorted(labels.begin(), labels.end(), [](const auto& a, const auto& b) {
    return a.canonical_name < b.canonical_name;
  }));
  CHECK(parse_label("Ad Hominem").index() == 0);
}

TEST_CASE("background-knowledge labels have no argument structure") {
  std::set<std::string> background;
  for (const auto& l : fallacy_labels()) {
    const bool bg = l.fallacy_type == FallacyType::kBackgroundKnowledge;
    if (bg) background.insert(l.canonical_name);
    CHECK(bg == !l.argument_structure.has_value());
  }
  CHECK(background ==
        std::set<std::string>{"misrepresentation", "oversimplification", "slothful induction"});
}

TEST_CASE("parse_label normalization") {
  CHECK(parse_label("Ad Hominem").name() == "ad hominem");
  CHECK(parse_label("  cherry picking.").name() == "cherry picking");
  CHECK(parse_label("FALSE   choice!?").name() == "false choice");
  CHECK(parse_label("\tsingle\ncause;").name() == "single cause");
  CHECK_FALSE(try_parse_label("cherry-picking").has_value());
  try {
    parse_label("None of the above");
    FAIL("expected UnknownLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownLabel);
  }
}

TEST_CASE("display names round trip") {
  for (auto label : all_labels()) {
    CHECK(parse_label(label.info().display_name) == label);
  }
}

TEST_CASE("label_info returns the reference rows") {
  const auto& ah = label_info(parse_label("ad hominem"));
  CHECK(ah.definition.rfind("Attacking a person/group", 0) == 0);
  CHECK(ah.fallacy_type == FallacyType::kStructural);
  CHECK(ah.argument_structure.value() == "A has a negative trait. Therefore, A is not credible.");

  const auto& si = label_info(parse_label("slothful induction"));
  CHECK(si.definition == "Ignoring relevant evidence when coming to a conclusion");
  CHECK(si.fallacy_type == FallacyType::kBackgroundKnowledge);
  CHECK_FALSE(si.argument_structure.has_value());

  const auto& fe = label_info(parse_label("fake experts"));
  CHECK(fe.fallacy_type == FallacyType::kStructural);
  CHECK(fe.argument_structure.value().rfind("P has expertise in a non-climate topic", 0) == 0);
}

TEST_CASE("embedded data is versioned") {
  CHECK(taxonomy_version() == 1);
  CHECK(taxonomy_data().find("\"format\": \"flicc.taxonomy\"") != std::string_view::npos);
}

TEST_CASE("CARDS claim codes") {
  for (const char* code : {"5.2", "1.3", "1.1", "5.3", "5.1", "2.3", "4.2", "3.3", "1.6", "2.1"}) {
    CHECK(find_claim(code).has_value());
  }
  for (const auto& c : cards_claims()) CHECK(is_claim_code(c.code));
  CHECK_FALSE(is_claim_code("5"));
  CHECK_FALSE(is_claim_code("5.22"));
  CHECK_FALSE(is_claim_code("a.b"));
}
