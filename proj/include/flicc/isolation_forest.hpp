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
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace flicc {

struct IsolationForestOptions {
  std::size_t num_trees = 100;
  std::size_t subsample = 256;
  std::uint64_t seed = 0;
};

// Average path length of an unsuccessful search in a binary search tree of
// n points; normalizes path lengths so that scores are comparable across
// subsample sizes.
double average_path_length(std::size_t n);

// Isolation forest over the rows of a dense matrix. Each tree is grown on a
// random subsample without replacement; a node splits on a uniformly chosen
// non-constant feature at a uniform threshold between its min and max.
class IsolationForest {
 public:
  IsolationForest(const Eigen::MatrixXd& points, const IsolationForestOptions& options);

  // Anomaly score in (0, 1]; larger is more anomalous.
  double score(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  double mean_path_length(const Eigen::Ref<const Eigen::VectorXd>& point) const;

  std::size_t num_trees() const { return trees_.size(); }
  std::size_t subsample() const { return subsample_; }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::size_t size = 0;
  };
  using Tree = std::vector<Node>;

  double path_length(const Tree& tree, const Eigen::Ref<const Eigen::VectorXd>& point) const;

  std::vector<Tree> trees_;
  std::size_t subsample_ = 0;
};

}  // namespace flicc
