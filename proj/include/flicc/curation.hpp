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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flicc/corpus.hpp"
#include "flicc/isolation_forest.hpp"
#include "flicc/model.hpp"

namespace flicc::curation {

struct Embedding {
  std::string sample_id;
  std::vector<double> vector;
};

// Encoder ids:
//   "lexical-hash"      signed feature hashing of lowercased word unigrams,
//                       bigrams and character trigrams, L2-normalized.
//   "model:<dir>"       final-layer states of a trained artifact, pooled.
struct EncoderConfig {
  std::string id = "lexical-hash";
  Pooling pooling = Pooling::kMean;
  std::size_t dimension = 512;  // lexical-hash only
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> encode(std::string_view text) const = 0;
};

// Throws EncoderUnavailable for unknown ids or unreadable artifacts.
std::unique_ptr<TextEncoder> make_encoder(const EncoderConfig& config);

// One embedding per text, order preserved; sample_id is the position.
std::vector<Embedding> embed(std::span<const std::string> texts, const EncoderConfig& config);
std::vector<Embedding> embed(const Dataset& dataset, const EncoderConfig& config);

double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const Embedding& a, const Embedding& b);

// sqrt(p.p - 2 p.q + q.q); a tiny negative radicand from rounding reads as 0.
double expanded_euclidean_distance(std::span<const double> p, std::span<const double> q);

enum class ReviewKind { kExactDup, kNearDup, kCentroidOutlier, kForestOutlier };

std::string_view review_kind_name(ReviewKind kind);

struct ReviewItem {
  ReviewKind kind;
  std::vector<std::string> sample_ids;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

// Groups (size >= 2) of byte-identical texts, in order of first occurrence.
std::vector<std::vector<std::string>> exact_duplicates(const Dataset& dataset);

struct NearDuplicateQuery {
  std::optional<double> threshold;
  std::optional<std::size_t> top_k;
};

// Unordered pairs ranked by descending cosine similarity; ties keep index order.
std::vector<ReviewItem> near_duplicate_pairs(std::span<const Embedding> embeddings,
                                             const NearDuplicateQuery& query);

struct CentroidDistance {
  std::string sample_id;
  Label label;
  double distance = 0.0;
};

// Distance of every sample to the mean embedding of its label, descending.
std::vector<CentroidDistance> centroid_distances(const Dataset& dataset,
                                                 std::span<const Embedding> embeddings);

std::vector<ReviewItem> as_review_items(std::span<const CentroidDistance> distances,
                                        std::size_t limit);

struct ForestResult {
  std::vector<ReviewItem> flagged;  // round(contamination * n) items, descending score
  std::vector<double> scores;       // one per embedding, input order
};

ForestResult forest_outliers(std::span<const Embedding> embeddings, double contamination,
                             std::uint64_t seed, IsolationForestOptions options = {});

struct ReviewInputs {
  std::vector<std::vector<std::string>> exact_groups;
  std::vector<ReviewItem> near_duplicates;
  std::vector<ReviewItem> centroid_outliers;
  std::vector<ReviewItem> forest_outliers;
};

enum class ReviewSection { kExactDuplicates, kNearDuplicates, kOutlierBoth, kOutlierCentroid, kOutlierForest };

struct ReviewEntry {
  ReviewSection section;
  std::vector<std::string> sample_ids;
  std::optional<double> similarity;
  std::optional<double> centroid_distance;
  std::optional<double> forest_score;
};

// Exact duplicates first, then near duplicates by similarity, then the union
// of outliers: flagged by both, centroid only, forest only.
std::vector<ReviewEntry> build_review(const ReviewInputs& inputs);
std::string render_review(const std::vector<ReviewEntry>& entries, const Dataset* dataset = nullptr);
std::vector<ReviewEntry> review_report(const ReviewInputs& inputs,
                                       const std::filesystem::path& out,
                                       const Dataset* dataset = nullptr);

struct CurateOptions {
  EncoderConfig encoder;
  std::size_t top_k = 100;
  double contamination = 0.02;
  std::uint64_t seed = 0;
  // Centroid ranking cut-off; by default as many as the forest flags.
  std::optional<std::size_t> centroid_top;
};

ReviewInputs curate(const Dataset& dataset, const CurateOptions& options);

}  // namespace flicc::curation
