// Copyright 2026 The ctxrank Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "ctxrank/common.hpp"

namespace ctxrank::gbdt {

template <typename Scalar>
struct GradHessT {
  Scalar grad;
  Scalar hess;
};
using GradHess = GradHessT<double>;

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-x))
                        : exp(x) / (Scalar(1) + exp(x));
}

// Weighted binary cross-entropy at raw log-odds `score`. Positives carry
// weight scale_pos_weight.
template <typename Scalar>
GradHessT<Scalar> logloss_grad_hess(Scalar score, Scalar label, Scalar scale_pos_weight) {
  const Scalar p = sigmoid(score);
  const Scalar w = label > Scalar(0.5) ? scale_pos_weight : Scalar(1);
  return {w * (p - label), w * p * (Scalar(1) - p)};
}

template <typename Scalar>
Scalar logloss(Scalar score, Scalar label, Scalar scale_pos_weight) {
  using std::log1p;
  using std::exp;
  using std::abs;
  const Scalar w = label > Scalar(0.5) ? scale_pos_weight : Scalar(1);
  // log(1 + e^-|s|) + max(s, 0) - label * s, stable for large |s|
  const Scalar softplus = log1p(exp(-abs(score))) + (score > Scalar(0) ? score : Scalar(0));
  return w * (softplus - label * score);
}

// Contiguous rows forming one ranking group.
struct RowGroup {
  std::size_t begin = 0;
  std::size_t size = 0;
};

// |delta NDCG| of swapping each pair inside one group, with gains
// 2^label - 1, log2 discounts and positions from the current score order
// (ties by row order). Zero matrix when the group has no positive label.
Eigen::MatrixXd ndcg_swap_weights(std::span<const double> scores,
                                  std::span<const double> labels);

// Lambdarank gradients with sigma = 1: for every pair with label_i >
// label_j, rho = 1 / (1 + exp(sigma (s_i - s_j))) and
//   grad_i -= sigma rho |dNDCG|,  grad_j += sigma rho |dNDCG|,
//   hess_i += sigma^2 rho (1 - rho) |dNDCG|, likewise hess_j.
// Writes every row covered by `groups`.
void lambdarank_grad_hess(std::span<const double> scores, std::span<const double> labels,
                          std::span<const RowGroup> groups, std::span<double> grad,
                          std::span<double> hess, double sigma = 1.0);

// Same accumulation for one group with caller-supplied pair weights.
void pairwise_grad_hess(std::span<const double> scores, std::span<const double> labels,
                        const Eigen::MatrixXd& pair_weights, std::span<double> grad,
                        std::span<double> hess, double sigma = 1.0);

// Mean over groups of sum_{label_i > label_j} |dNDCG| log(1 + e^{-(s_i - s_j)}).
double lambdarank_cost(std::span<const double> scores, std::span<const double> labels,
                       std::span<const RowGroup> groups);

}  // namespace ctxrank::gbdt
