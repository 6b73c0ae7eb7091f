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

#include "flicc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "flicc/error.hpp"
#include "flicc/random.hpp"

namespace flicc {
namespace {

using nlohmann::json;

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val" || name == "validation") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kParseError, "unknown split '" + std::string(name) + "'");
}

std::vector<Sample> Dataset::in_split(Split split) const {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.split == split) out.push_back(s);
  }
  return out;
}

Dataset read_dataset(std::istream& in, std::string_view source) {
  Dataset ds;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    if (line.front() == '#') {
      std::string_view note(line);
      note.remove_prefix(1);
      if (!note.empty() && note.front() == ' ') note.remove_prefix(1);
      if (!ds.provenance.empty()) ds.provenance += '\n';
      ds.provenance += note;
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseError, where(source, lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("text") || !j.contains("label") ||
        !j["id"].is_string() || !j["text"].is_string() || !j["label"].is_string()) {
      throw Error(ErrorCode::kParseError,
                  where(source, lineno) + ": record needs string fields id, text, label");
    }
    std::string id = j["id"].get<std::string>();
    std::string text = j["text"].get<std::string>();
    if (blank(text)) {
      throw Error(ErrorCode::kEmptyText, where(source, lineno) + ": sample '" + id + "'");
    }
    auto label = try_parse_label(j["label"].get<std::string>());
    if (!label) {
      throw Error(ErrorCode::kUnknownLabel, where(source, lineno) + ": '" +
                                                j["label"].get<std::string>() + "'");
    }
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kDuplicateId, where(source, lineno) + ": '" + id + "'");
    }
    Sample s{std::move(id), std::move(text), *label, std::nullopt, std::nullopt};
    if (j.contains("claim") && !j["claim"].is_null()) {
      if (!j["claim"].is_string() || !is_claim_code(j["claim"].get<std::string>())) {
        throw Error(ErrorCode::kParseError, where(source, lineno) + ": bad claim code");
      }
      s.claim = j["claim"].get<std::string>();
    }
    if (j.contains("split") && !j["split"].is_null()) {
      if (!j["split"].is_string()) {
        throw Error(ErrorCode::kParseError, where(source, lineno) + ": bad split");
      }
      try {
        s.split = parse_split(j["split"].get<std::string>());
      } catch (const Error& e) {
        throw Error(ErrorCode::kParseError, where(source, lineno) + ": " + e.what());
      }
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      if (k != "id" && k != "text" && k != "label" && k != "claim" && k != "split") {
        s.extra[k] = it.value();
      }
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return read_dataset(in, path.string());
}

json sample_to_json(const Sample& s) {
  json j = s.extra.is_object() ? s.extra : json::object();
  j["id"] = s.id;
  j["text"] = s.text;
  j["label"] = std::string(s.label.name());
  if (s.claim) j["claim"] = *s.claim;
  if (s.split) j["split"] = std::string(split_name(*s.split));
  return j;
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  if (!dataset.provenance.empty()) {
    std::istringstream notes(dataset.provenance);
    std::string line;
    while (std::getline(notes, line)) out << "# " << line << '\n';
  }
  for (const auto& s : dataset.samples) out << sample_to_json(s).dump() << '\n';
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_dataset(dataset, out);
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::array<std::size_t, kNumSplits> largest_remainder_quotas(std::size_t count,
                                                             const SplitFractions& f) {
  const std::array<double, kNumSplits> fr{f.train, f.val, f.test};
  std::array<std::size_t, kNumSplits> quota{};
  std::array<double, kNumSplits> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < kNumSplits; ++k) {
    const double exact = fr[k] * static_cast<double>(count);
    quota[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(quota[k]);
    assigned += quota[k];
  }
  std::array<std::size_t, kNumSplits> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++quota[order[i % kNumSplits]];
  return quota;
}

Dataset stratified_split(const Dataset& dataset, const SplitFractions& f, std::uint64_t seed) {
  const double sum = f.train + f.val + f.test;
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must be non-negative and sum to 1");
  }
  std::array<std::vector<std::size_t>, kNumLabels> by_label;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    by_label[dataset.samples[i].label.index()].push_back(i);
  }
  Dataset out = dataset;
  Rng rng(seed);
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    auto& members = by_label[l];
    if (members.empty()) continue;
    const auto quota = largest_remainder_quotas(members.size(), f);
    if (members.size() < 3 || std::find(quota.begin(), quota.end(), 0) != quota.end()) {
      throw Error(ErrorCode::kInsufficientSamples,
                  "label '" + std::string(Label::from_index(l).name()) + "' with " +
                      std::to_string(members.size()) +
                      " samples cannot fill every partition");
    }
    rng.shuffle(std::span<std::size_t>(members));
    std::size_t pos = 0;
    for (std::size_t k = 0; k < kNumSplits; ++k) {
      for (std::size_t c = 0; c < quota[k]; ++c) {
        out.samples[members[pos++]].split = static_cast<Split>(k);
      }
    }
  }
  return out;
}

std::size_t SplitSummary::label_total(std::size_t label) const {
  const auto& row = counts.at(label);
  return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

std::size_t SplitSummary::split_total(Split split) const {
  std::size_t n = 0;
  for (const auto& row : counts) n += row[static_cast<std::size_t>(split)];
  return n;
}

std::size_t SplitSummary::total() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < kNumLabels; ++l) n += label_total(l);
  return n;
}

std::string SplitSummary::render() const {
  std::ostringstream os;
  os << std::left << std::setw(25) << "Label" << std::right << std::setw(7) << "train"
     << std::setw(7) << "val" << std::setw(7) << "test" << std::setw(8) << "Total" << '\n';
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    os << std::left << std::setw(25) << Label::from_index(l).name() << std::right;
    for (auto c : counts[l]) os << std::setw(7) << c;
    os << std::setw(8) << label_total(l) << '\n';
  }
  os << std::left << std::setw(25) << "Total" << std::right << std::setw(7)
     << split_total(Split::kTrain) << std::setw(7) << split_total(Split::kVal) << std::setw(7)
     << split_total(Split::kTest) << std::setw(8) << total() << '\n';
  return os.str();
}

json SplitSummary::to_json() const {
  json rows = json::array();
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    rows.push_back({{"label", Label::from_index(l).name()},
                    {"train", counts[l][0]},
                    {"val", counts[l][1]},
                    {"test", counts[l][2]},
                    {"total", label_total(l)}});
  }
  return {{"rows", rows},
          {"totals",
           {{"train", split_total(Split::kTrain)},
            {"val", split_total(Split::kVal)},
            {"test", split_total(Split::kTest)},
            {"total", total()}}}};
}

SplitSummary split_summary(const Dataset& dataset) {
  SplitSummary s;
  for (const auto& sample : dataset.samples) {
    if (!sample.split) {
      throw Error(ErrorCode::kUntaggedSample, "sample '" + sample.id + "' has no split tag");
    }
    ++s.counts[sample.label.index()][static_cast<std::size_t>(*sample.split)];
  }
  return s;
}

std::size_t CrossTab::at(Label label, std::string_view claim) const {
  auto it = std::find(claims.begin(), claims.end(), claim);
  if (it == claims.end()) return 0;
  return counts[label.index()][static_cast<std::size_t>(it - claims.begin())];
}

std::array<std::vector<double>, kNumLabels> CrossTab::row_shares() const {
  std::array<std::vector<double>, kNumLabels> shares;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    const auto& row = counts[l];
    const double sum = static_cast<double>(std::accumulate(row.begin(), row.end(), std::size_t{0}));
    shares[l].assign(row.size(), 0.0);
    if (sum == 0) continue;
    for (std::size_t c = 0; c < row.size(); ++c) shares[l][c] = static_cast<double>(row[c]) / sum;
  }
  return shares;
}

std::string CrossTab::render_csv() const {
  std::ostringstream os;
  os << "label";
  for (const auto& c : claims) os << ',' << c;
  os << '\n';
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    os << Label::from_index(l).name();
    for (auto v : counts[l]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

json CrossTab::to_json() const {
  json j;
  j["claims"] = claims;
  j["excluded"] = excluded;
  const auto shares = row_shares();
  json rows = json::array();
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    rows.push_back({{"label", Label::from_index(l).name()},
                    {"counts", counts[l]},
                    {"shares", shares[l]}});
  }
  j["rows"] = rows;
  return j;
}

CrossTab cross_tabulate(const Dataset& dataset) {
  CrossTab t;
  std::set<std::string> codes;
  for (const auto& s : dataset.samples) {
    if (s.claim) codes.insert(*s.claim);
  }
  t.claims.assign(codes.begin(), codes.end());
  for (auto& row : t.counts) row.assign(t.claims.size(), 0);
  for (const auto& s : dataset.samples) {
    if (!s.claim) {
      ++t.excluded;
      continue;
    }
    const auto col = std::lower_bound(t.claims.begin(), t.claims.end(), *s.claim) - t.claims.begin();
    ++t.counts[s.label.index()][static_cast<std::size_t>(col)];
  }
  return t;
}

Dataset apply_removals(const Dataset& dataset, const std::vector<std::string>& ids) {
  std::unordered_set<std::string> drop(ids.begin(), ids.end());
  std::unordered_set<std::string> present;
  for (const auto& s : dataset.samples) present.insert(s.id);
  for (const auto& id : drop) {
    if (!present.count(id)) {
      throw Error(ErrorCode::kInvalidArgument, "removal list names unknown id '" + id + "'");
    }
  }
  Dataset out;
  out.provenance = dataset.provenance;
  for (const auto& s : dataset.samples) {
    if (!drop.count(s.id)) out.samples.push_back(s);
  }
  return out;
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    line = line.substr(start);
    if (line.empty() || line.front() == '#') continue;
    ids.push_back(line);
  }
  return ids;
}

}  // namespace flicc
