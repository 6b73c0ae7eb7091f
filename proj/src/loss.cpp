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

#include "flicc/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flicc/error.hpp"

namespace flicc {
namespace {

double focal_term(double pt, double gamma) {
  const double p = std::clamp(pt, kProbabilityFloor, 1.0);
  return -std::pow(1.0 - p, gamma) * std::log(p);
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::kInvalidArgument, "focal gamma must be finite and >= 0");
  }
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

double focal_loss(std::span<const double> probabilities, std::size_t true_class, double gamma) {
  check_gamma(gamma);
  if (true_class >= probabilities.size()) {
    throw Error(ErrorCode::kInvalidArgument, "true class " + std::to_string(true_class) +
                                                 " outside " + std::to_string(probabilities.size()) +
                                                 " classes");
  }
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kInvalidSimplex, "probabilities must be finite and non-negative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidSimplex, "probabilities sum to " + std::to_string(sum));
  }
  return focal_term(probabilities[true_class], gamma);
}

double cross_entropy(std::span<const double> probabilities, std::size_t true_class) {
  return focal_loss(probabilities, true_class, 0.0);
}

double batch_focal_loss(const Eigen::Ref<const Eigen::MatrixXd>& probabilities,
                        std::span<const std::size_t> true_classes, double gamma) {
  if (static_cast<std::size_t>(probabilities.rows()) != true_classes.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one class index per probability row");
  }
  if (true_classes.empty()) throw Error(ErrorCode::kEmptyInput, "empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < true_classes.size(); ++i) {
    const Eigen::VectorXd row = probabilities.row(static_cast<long>(i)).transpose();
    total += focal_loss(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                        true_classes[i], gamma);
  }
  return total / static_cast<double>(true_classes.size());
}

LossWithGradient focal_loss_from_logits(const Eigen::Ref<const Eigen::VectorXd>& logits,
                                        std::size_t true_class, double gamma) {
  check_gamma(gamma);
  if (true_class >= static_cast<std::size_t>(logits.size())) {
    throw Error(ErrorCode::kInvalidArgument, "true class outside logits");
  }
  const Eigen::VectorXd s = softmax(logits);
  const double pt = s[static_cast<long>(true_class)];
  const double p = std::clamp(pt, kProbabilityFloor, 1.0);
  const double one_minus = 1.0 - p;

  LossWithGradient out;
  out.loss = focal_term(pt, gamma);

  // d/dp [-(1-p)^g log p] = g (1-p)^(g-1) log p - (1-p)^g / p
  double dldp = -std::pow(one_minus, gamma) / p;
  if (gamma > 0.0 && one_minus > 0.0) {
    dldp += gamma * std::pow(one_minus, gamma - 1.0) * std::log(p);
  }
  // dp_t / dz_j = p_t (delta_tj - s_j); the clamp has zero slope below the floor.
  const double scale = pt < kProbabilityFloor ? 0.0 : dldp * pt;
  out.grad = -scale * s;
  out.grad[static_cast<long>(true_class)] += scale;
  return out;
}

}  // namespace flicc
