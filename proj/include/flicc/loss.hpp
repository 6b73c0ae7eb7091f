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
#include <span>

#include <Eigen/Dense>

namespace flicc {

// p_t is clamped to [kProbabilityFloor, 1] before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

// -(1 - p_t)^gamma * log(p_t) for one sample. gamma = 0 is cross-entropy.
// Throws InvalidSimplex unless the probabilities are non-negative and sum to
// 1 within 1e-6, InvalidArgument for a bad class index or negative gamma.
double focal_loss(std::span<const double> probabilities, std::size_t true_class, double gamma);

double cross_entropy(std::span<const double> probabilities, std::size_t true_class);

// Mean focal loss over a batch of probability rows.
double batch_focal_loss(const Eigen::Ref<const Eigen::MatrixXd>& probabilities,
                        std::span<const std::size_t> true_classes, double gamma);

struct LossWithGradient {
  double loss = 0.0;
  Eigen::VectorXd grad;  // d loss / d logits
};

// Focal loss of softmax(logits) and its gradient with respect to the logits.
LossWithGradient focal_loss_from_logits(const Eigen::Ref<const Eigen::VectorXd>& logits,
                                        std::size_t true_class, double gamma);

}  // namespace flicc
