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

#include "flicc/isolation_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flicc/random.hpp"

namespace flicc {
namespace {

constexpr double kEulerGamma = 0.5772156649015329;

}  // namespace

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + kEulerGamma) - 2.0 * m / static_cast<double>(n);
}

IsolationForest::IsolationForest(const Eigen::MatrixXd& points,
                                 const IsolationForestOptions& options) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  subsample_ = std::min(options.subsample, n);
  const auto height_limit =
      static_cast<std::size_t>(std::ceil(std::log2(std::max<std::size_t>(subsample_, 2))));
  Rng rng(options.seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  trees_.reserve(options.num_trees);
  for (std::size_t t = 0; t < options.num_trees; ++t) {
    // Partial Fisher-Yates: the first subsample_ entries are a uniform sample.
    for (std::size_t i = 0; i < subsample_; ++i) {
      std::swap(all[i], all[i + rng.below(n - i)]);
    }
    std::vector<std::size_t> rows(all.begin(), all.begin() + static_cast<long>(subsample_));
    Tree tree;
    tree.reserve(2 * subsample_);

    struct Frame {
      std::size_t begin, end, depth;
      int node;
    };
    tree.push_back({});
    std::vector<Frame> stack{{0, rows.size(), 0, 0}};
    std::vector<int> usable;
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      Node& node = tree[static_cast<std::size_t>(f.node)];
      node.size = f.end - f.begin;
      if (node.size <= 1 || f.depth >= height_limit) continue;

      usable.clear();
      Eigen::VectorXd lo = points.row(static_cast<long>(rows[f.begin])).transpose();
      Eigen::VectorXd hi = lo;
      for (std::size_t r = f.begin + 1; r < f.end; ++r) {
        const auto row = points.row(static_cast<long>(rows[r])).transpose();
        lo = lo.cwiseMin(row);
        hi = hi.cwiseMax(row);
      }
      for (long k = 0; k < lo.size(); ++k) {
        if (hi[k] > lo[k]) usable.push_back(static_cast<int>(k));
      }
      if (usable.empty()) continue;

      const int feature = usable[rng.below(usable.size())];
      double threshold = rng.uniform(lo[feature], hi[feature]);
      if (threshold <= lo[feature]) threshold = std::nextafter(lo[feature], hi[feature]);
      const auto mid = std::partition(
          rows.begin() + static_cast<long>(f.begin), rows.begin() + static_cast<long>(f.end),
          [&](std::size_t r) { return points(static_cast<long>(r), feature) < threshold; });
      const std::size_t split = static_cast<std::size_t>(mid - rows.begin());

      const int left = static_cast<int>(tree.size());
      tree.push_back({});
      const int right = static_cast<int>(tree.size());
      tree.push_back({});
      Node& parent = tree[static_cast<std::size_t>(f.node)];
      parent.feature = feature;
      parent.threshold = threshold;
      parent.left = left;
      parent.right = right;
      stack.push_back({f.begin, split, f.depth + 1, left});
      stack.push_back({split, f.end, f.depth + 1, right});
    }
    trees_.push_back(std::move(tree));
  }
}

double IsolationForest::path_length(const Tree& tree,
                                    const Eigen::Ref<const Eigen::VectorXd>& point) const {
  std::size_t depth = 0;
  int at = 0;
  while (tree[static_cast<std::size_t>(at)].feature >= 0) {
    const Node& node = tree[static_cast<std::size_t>(at)];
    at = point[node.feature] < node.threshold ? node.left : node.right;
    ++depth;
  }
  return static_cast<double>(depth) +
         average_path_length(tree[static_cast<std::size_t>(at)].size);
}

double IsolationForest::mean_path_length(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  double total = 0.0;
  for (const auto& tree : trees_) total += path_length(tree, point);
  return trees_.empty() ? 0.0 : total / static_cast<double>(trees_.size());
}

double IsolationForest::score(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  const double c = average_path_length(subsample_);
  if (c == 0.0) return 0.5;
  return std::pow(2.0, -mean_path_length(point) / c);
}

}  // namespace flicc
