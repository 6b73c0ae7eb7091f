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

#include "flicc/curation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Dense>

#include "flicc/error.hpp"
#include "flicc/tokenizer.hpp"

namespace flicc::curation {
namespace {

bool is_word(const std::string& piece) {
  const unsigned char c = static_cast<unsigned char>(piece.front());
  return std::isalnum(c) || c >= 0x80;
}

void require_text(std::string_view text) {
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
    throw Error(ErrorCode::kEmptyInput, "cannot embed blank text");
  }
}

class LexicalHashEncoder final : public TextEncoder {
 public:
  LexicalHashEncoder(std::size_t dimension, Pooling pooling)
      : dimension_(dimension), pooling_(pooling) {
    if (dimension_ == 0) throw Error(ErrorCode::kInvalidArgument, "dimension must be positive");
  }

  std::size_t dimension() const override { return dimension_; }

  std::vector<double> encode(std::string_view text) const override {
    require_text(text);
    auto pieces = word_pieces(text);
    std::vector<std::string> words;
    std::copy_if(pieces.begin(), pieces.end(), std::back_inserter(words), is_word);
    if (words.empty()) words = std::move(pieces);

    std::vector<double> out(dimension_, 0.0);
    const std::size_t used = pooling_ == Pooling::kFirst ? 1 : words.size();
    for (std::size_t i = 0; i < used; ++i) {
      add(out, "w:" + words[i], 1.0);
      if (i + 1 < words.size()) add(out, "b:" + words[i] + ' ' + words[i + 1], 1.0);
      const std::string padded = '<' + words[i] + '>';
      for (std::size_t k = 0; k + 3 <= padded.size(); ++k) {
        add(out, "c:" + padded.substr(k, 3), 0.5);
      }
    }
    double norm = 0.0;
    for (double v : out) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (double& v : out) v /= norm;
    }
    return out;
  }

 private:
  void add(std::vector<double>& out, const std::string& feature, double weight) const {
    const std::uint64_t h = fnv1a64(feature);
    out[h % dimension_] += (h >> 63) ? -weight : weight;
  }

  std::size_t dimension_;
  Pooling pooling_;
};

class ModelEncoder final : public TextEncoder {
 public:
  ModelEncoder(SequenceClassifier model, Pooling pooling)
      : model_(std::move(model)), tokenizer_(model_.tokenizer()), pooling_(pooling) {}

  std::size_t dimension() const override { return model_.architecture().hidden; }

  std::vector<double> encode(std::string_view text) const override {
    require_text(text);
    const Eigen::VectorXd v = model_.pooled(tokenizer_.encode(text), pooling_);
    return {v.data(), v.data() + v.size()};
  }

 private:
  SequenceClassifier model_;
  HashTokenizer tokenizer_;
  Pooling pooling_;
};

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

std::string fmt(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::size_t common_dimension(std::span<const Embedding> embeddings) {
  const std::size_t d = embeddings.empty() ? 0 : embeddings.front().vector.size();
  for (const auto& e : embeddings) {
    if (e.vector.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding '" + e.sample_id + "' has dimension " +
                                                     std::to_string(e.vector.size()));
    }
    for (double v : e.vector) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument, "embedding '" + e.sample_id + "' is not finite");
      }
    }
  }
  return d;
}

Eigen::MatrixXd as_matrix(std::span<const Embedding> embeddings) {
  const std::size_t d = common_dimension(embeddings);
  Eigen::MatrixXd m(static_cast<long>(embeddings.size()), static_cast<long>(d));
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    m.row(static_cast<long>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(embeddings[i].vector.data(), static_cast<long>(d));
  }
  return m;
}

}  // namespace

std::unique_ptr<TextEncoder> make_encoder(const EncoderConfig& config) {
  if (config.id == "lexical-hash") {
    return std::make_unique<LexicalHashEncoder>(config.dimension, config.pooling);
  }
  constexpr std::string_view kModelPrefix = "model:";
  if (config.id.rfind(kModelPrefix, 0) == 0) {
    const std::filesystem::path dir = config.id.substr(kModelPrefix.size());
    try {
      return std::make_unique<ModelEncoder>(SequenceClassifier::load(dir), config.pooling);
    } catch (const Error& e) {
      throw Error(ErrorCode::kEncoderUnavailable, config.id + ": " + e.what());
    }
  }
  throw Error(ErrorCode::kEncoderUnavailable, "unknown encoder '" + config.id + "'");
}

std::vector<Embedding> embed(std::span<const std::string> texts, const EncoderConfig& config) {
  if (texts.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to embed");
  const auto encoder = make_encoder(config);
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.push_back({std::to_string(i), encoder->encode(texts[i])});
  }
  return out;
}

std::vector<Embedding> embed(const Dataset& dataset, const EncoderConfig& config) {
  std::vector<std::string> texts;
  texts.reserve(dataset.size());
  for (const auto& s : dataset.samples) texts.push_back(s.text);
  auto out = embed(texts, config);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].sample_id = dataset.samples[i].id;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_similarity(std::span<const double>(a.vector), std::span<const double>(b.vector));
}

double expanded_euclidean_distance(std::span<const double> p, std::span<const double> q) {
  check_pair(p, q);
  double pp = 0.0, pq = 0.0, qq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pp += p[i] * p[i];
    pq += p[i] * q[i];
    qq += q[i] * q[i];
  }
  return std::sqrt(std::max(0.0, pp - 2.0 * pq + qq));
}

std::string_view review_kind_name(ReviewKind kind) {
  switch (kind) {
    case ReviewKind::kExactDup: return "exact_dup";
    case ReviewKind::kNearDup: return "near_dup";
    case ReviewKind::kCentroidOutlier: return "centroid_outlier";
    case ReviewKind::kForestOutlier: return "forest_outlier";
  }
  return "exact_dup";
}

std::vector<std::vector<std::string>> exact_duplicates(const Dataset& dataset) {
  std::unordered_map<std::string_view, std::size_t> group_of;
  std::vector<std::vector<std::string>> groups;
  for (const auto& s : dataset.samples) {
    auto [it, fresh] = group_of.try_emplace(s.text, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(s.id);
  }
  std::erase_if(groups, [](const auto& g) { return g.size() < 2; });
  return groups;
}

std::vector<ReviewItem> near_duplicate_pairs(std::span<const Embedding> embeddings,
                                             const NearDuplicateQuery& query) {
  if (!query.threshold && !query.top_k) {
    throw Error(ErrorCode::kInvalidArgument, "near-duplicate query needs a threshold or top_k");
  }
  if (embeddings.size() < 2) return {};
  Eigen::MatrixXd m = as_matrix(embeddings);
  for (long i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm == 0.0) {
      throw Error(ErrorCode::kZeroVector,
                  "embedding '" + embeddings[static_cast<std::size_t>(i)].sample_id + "' is zero");
    }
    m.row(i) /= norm;
  }

  struct Pair {
    double sim;
    long i, j;
  };
  // "Better" pairs rank first: higher similarity, then lower indices.
  auto better = [](const Pair& a, const Pair& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  };
  std::priority_queue<Pair, std::vector<Pair>, decltype(better)> heap(better);
  std::vector<Pair> kept;
  const long n = m.rows();
  constexpr long kBlock = 256;
  for (long start = 0; start < n; start += kBlock) {
    const long rows = std::min(kBlock, n - start);
    const Eigen::MatrixXd sims = m.middleRows(start, rows) * m.transpose();
    for (long r = 0; r < rows; ++r) {
      const long i = start + r;
      for (long j = i + 1; j < n; ++j) {
        const Pair p{std::clamp(sims(r, j), -1.0, 1.0), i, j};
        if (query.threshold && p.sim < *query.threshold) continue;
        if (!query.top_k) {
          kept.push_back(p);
          continue;
        }
        if (heap.size() < *query.top_k) {
          heap.push(p);
        } else if (*query.top_k > 0 && better(p, heap.top())) {
          heap.pop();
          heap.push(p);
        }
      }
    }
  }
  while (!heap.empty()) {
    kept.push_back(heap.top());
    heap.pop();
  }
  std::sort(kept.begin(), kept.end(), better);

  std::vector<ReviewItem> out;
  out.reserve(kept.size());
  for (const auto& p : kept) {
    out.push_back({ReviewKind::kNearDup,
                   {embeddings[static_cast<std::size_t>(p.i)].sample_id,
                    embeddings[static_cast<std::size_t>(p.j)].sample_id},
                   p.sim,
                   out.size() + 1});
  }
  return out;
}

std::vector<CentroidDistance> centroid_distances(const Dataset& dataset,
                                                 std::span<const Embedding> embeddings) {
  const std::size_t d = common_dimension(embeddings);
  std::unordered_map<std::string_view, std::size_t> by_id;
  for (std::size_t i = 0; i < embeddings.size(); ++i) by_id.emplace(embeddings[i].sample_id, i);

  std::vector<std::size_t> index(dataset.size());
  std::array<std::vector<double>, kNumLabels> mean;
  std::array<std::size_t, kNumLabels> count{};
  for (auto& m : mean) m.assign(d, 0.0);
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const auto& sample = dataset.samples[s];
    auto it = by_id.find(sample.id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kMissingEmbedding, "no embedding for sample '" + sample.id + "'");
    }
    index[s] = it->second;
    const auto l = sample.label.index();
    ++count[l];
    const auto& v = embeddings[it->second].vector;
    for (std::size_t k = 0; k < d; ++k) mean[l][k] += v[k];
  }
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    if (count[l] == 0) continue;
    for (double& v : mean[l]) v /= static_cast<double>(count[l]);
  }

  std::vector<CentroidDistance> out;
  out.reserve(dataset.size());
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const auto& sample = dataset.samples[s];
    out.push_back({sample.id, sample.label,
                   expanded_euclidean_distance(embeddings[index[s]].vector,
                                               mean[sample.label.index()])});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.distance > b.distance; });
  return out;
}

std::vector<ReviewItem> as_review_items(std::span<const CentroidDistance> distances,
                                        std::size_t limit) {
  std::vector<ReviewItem> out;
  for (std::size_t i = 0; i < std::min(limit, distances.size()); ++i) {
    out.push_back({ReviewKind::kCentroidOutlier, {distances[i].sample_id}, distances[i].distance,
                   i + 1});
  }
  return out;
}

ForestResult forest_outliers(std::span<const Embedding> embeddings, double contamination,
                             std::uint64_t seed, IsolationForestOptions options) {
  if (!(contamination > 0.0 && contamination <= 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "contamination must lie in (0, 0.5]");
  }
  if (embeddings.size() < 10) {
    throw Error(ErrorCode::kTooFewSamples, "isolation forest needs at least 10 embeddings");
  }
  const Eigen::MatrixXd points = as_matrix(embeddings);
  options.seed = seed;
  const IsolationForest forest(points, options);

  ForestResult result;
  result.scores.resize(embeddings.size());
  for (long i = 0; i < points.rows(); ++i) {
    result.scores[static_cast<std::size_t>(i)] = forest.score(points.row(i).transpose());
  }
  std::vector<std::size_t> order(embeddings.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return result.scores[a] > result.scores[b]; });
  const auto flagged = static_cast<std::size_t>(
      std::llround(contamination * static_cast<double>(embeddings.size())));
  for (std::size_t r = 0; r < flagged; ++r) {
    result.flagged.push_back({ReviewKind::kForestOutlier,
                              {embeddings[order[r]].sample_id},
                              result.scores[order[r]],
                              r + 1});
  }
  return result;
}

std::vector<ReviewEntry> build_review(const ReviewInputs& inputs) {
  std::vector<ReviewEntry> out;
  for (const auto& g : inputs.exact_groups) {
    out.push_back({ReviewSection::kExactDuplicates, g, std::nullopt, std::nullopt, std::nullopt});
  }
  auto near = inputs.near_duplicates;
  std::stable_sort(near.begin(), near.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  for (const auto& p : near) {
    out.push_back({ReviewSection::kNearDuplicates, p.sample_ids, p.score, std::nullopt,
                   std::nullopt});
  }

  std::unordered_map<std::string, double> forest;
  for (const auto& f : inputs.forest_outliers) forest.emplace(f.sample_ids.at(0), f.score);
  std::unordered_set<std::string> centroid;
  std::vector<ReviewEntry> only_centroid;
  for (const auto& c : inputs.centroid_outliers) {
    const auto& id = c.sample_ids.at(0);
    centroid.insert(id);
    auto it = forest.find(id);
    if (it != forest.end()) {
      out.push_back({ReviewSection::kOutlierBoth, {id}, std::nullopt, c.score, it->second});
    } else {
      only_centroid.push_back(
          {ReviewSection::kOutlierCentroid, {id}, std::nullopt, c.score, std::nullopt});
    }
  }
  out.insert(out.end(), only_centroid.begin(), only_centroid.end());
  for (const auto& f : inputs.forest_outliers) {
    const auto& id = f.sample_ids.at(0);
    if (!centroid.count(id)) {
      out.push_back({ReviewSection::kOutlierForest, {id}, std::nullopt, std::nullopt, f.score});
    }
  }
  return out;
}

std::string render_review(const std::vector<ReviewEntry>& entries, const Dataset* dataset) {
  std::unordered_map<std::string_view, const Sample*> by_id;
  if (dataset) {
    for (const auto& s : dataset->samples) by_id.emplace(s.id, &s);
  }
  auto describe = [&](const std::string& id) {
    std::string line = "`" + id + "`";
    auto it = by_id.find(id);
    if (it != by_id.end()) {
      line += " [" + std::string(it->second->label.name()) + "] " + it->second->text;
    }
    return line;
  };

  static constexpr const char* kTitles[] = {
      "Exact duplicates", "Near duplicates", "Outliers flagged by centroid distance and isolation forest",
      "Outliers flagged by centroid distance only", "Outliers flagged by isolation forest only"};
  std::ostringstream os;
  os << "# Curation review\n";
  std::optional<ReviewSection> current;
  std::size_t n = 0;
  for (const auto& e : entries) {
    if (e.section != current) {
      current = e.section;
      n = 0;
      std::size_t count = 0;
      for (const auto& x : entries) count += x.section == e.section;
      os << "\n## " << kTitles[static_cast<int>(e.section)] << " (" << count << ")\n\n";
    }
    os << ++n << ".";
    if (e.similarity) os << " cosine " << fmt(*e.similarity);
    if (e.centroid_distance) os << " distance " << fmt(*e.centroid_distance);
    if (e.forest_score) os << " forest score " << fmt(*e.forest_score);
    os << '\n';
    for (const auto& id : e.sample_ids) os << "   - " << describe(id) << '\n';
  }
  return os.str();
}

std::vector<ReviewEntry> review_report(const ReviewInputs& inputs,
                                       const std::filesystem::path& out, const Dataset* dataset) {
  auto entries = build_review(inputs);
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + out.string());
  f << render_review(entries, dataset);
  if (!f) throw Error(ErrorCode::kIoError, "write failed for " + out.string());
  return entries;
}

ReviewInputs curate(const Dataset& dataset, const CurateOptions& options) {
  ReviewInputs in;
  in.exact_groups = exact_duplicates(dataset);
  const auto embeddings = embed(dataset, options.encoder);
  in.near_duplicates = near_duplicate_pairs(embeddings, {std::nullopt, options.top_k});
  auto forest = forest_outliers(embeddings, options.contamination, options.seed);
  in.forest_outliers = std::move(forest.flagged);
  const auto distances = centroid_distances(dataset, embeddings);
  in.centroid_outliers =
      as_review_items(distances, options.centroid_top.value_or(in.forest_outliers.size()));
  return in;
}

}  // namespace flicc::curation
