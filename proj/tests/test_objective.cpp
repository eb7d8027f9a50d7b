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

#include <gtest/gtest.h>

#include <vector>

#include "ctxrank/objective.hpp"
#include "ctxrank/parallel.hpp"

namespace ctxrank::gbdt {
namespace {

TEST(Logloss, MidpointExamples) {
  auto gh = logloss_grad_hess(0.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(gh.grad, -0.5);
  EXPECT_DOUBLE_EQ(gh.hess, 0.25);
  gh = logloss_grad_hess(0.0, 1.0, 35.0);
  EXPECT_DOUBLE_EQ(gh.grad, -17.5);
  EXPECT_DOUBLE_EQ(gh.hess, 8.75);
  // Negatives are never reweighted.
  gh = logloss_grad_hess(0.0, 0.0, 35.0);
  EXPECT_DOUBLE_EQ(gh.grad, 0.5);
  EXPECT_DOUBLE_EQ(gh.hess, 0.25);
}

TEST(Logloss, MatchesFiniteDifferences) {
  const double h = 1e-5;
  for (double w : {1.0, 35.0})
    for (double y : {0.0, 1.0})
      for (double s : {-2.0, 0.0, 2.0}) {
        const double fd = (logloss(s + h, y, w) - logloss(s - h, y, w)) / (2 * h);
        const double fd2 = (logloss(s + h, y, w) - 2 * logloss(s, y, w) + logloss(s - h, y, w)) / (h * h);
        const auto gh = logloss_grad_hess(s, y, w);
        EXPECT_NEAR(gh.grad, fd, 1e-6 * std::max(1.0, std::abs(fd)));
        EXPECT_NEAR(gh.hess, fd2, 1e-4 * std::max(1.0, std::abs(fd2)));
      }
}

TEST(Logloss, StableAtExtremes) {
  EXPECT_NEAR(logloss(800.0, 0.0, 1.0), 800.0, 1e-9);
  EXPECT_NEAR(logloss(-800.0, 1.0, 1.0), 800.0, 1e-9);
  EXPECT_EQ(sigmoid(-800.0), 0.0);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  EXPECT_NEAR(sigmoid(1.0f), 0.7310586f, 1e-6f);
}

// Frozen-weight pairwise logistic cost for one group.
double pair_cost(const std::vector<double>& s, const std::vector<double>& l,
                 const Eigen::MatrixXd& w) {
  double c = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (l[i] > l[j])
        c += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * std::log1p(std::exp(-(s[i] - s[j])));
  return c;
}

TEST(Lambdarank, GradientMatchesFrozenWeightCost) {
  const std::vector<double> scores{0.3, -1.2, 0.8, 0.05, 2.0, -0.4};
  const std::vector<double> labels{0, 1, 0, 0, 1, 0};
  const Eigen::MatrixXd w = ndcg_swap_weights(scores, labels);
  std::vector<double> grad(6), hess(6);
  const RowGroup group{0, 6};
  lambdarank_grad_hess(scores, labels, std::span(&group, 1), grad, hess);
  const double h = 1e-6;
  for (std::size_t k = 0; k < 6; ++k) {
    auto up = scores, down = scores;
    up[k] += h;
    down[k] -= h;
    const double fd = (pair_cost(up, labels, w) - pair_cost(down, labels, w)) / (2 * h);
    EXPECT_NEAR(grad[k], fd, 1e-4 * std::max(1e-3, std::abs(fd)));
    EXPECT_GE(hess[k], 0.0);
  }
  double sum = 0.0;
  for (double g : grad) sum += g;
  EXPECT_NEAR(sum, 0.0, 1e-12);
}

TEST(Lambdarank, SwapWeightsHandExample) {
  // Positive at position 3 of 3; moving it to the top gains 1 - 1/log2(4).
  const std::vector<double> scores{3.0, 2.0, 1.0};
  const std::vector<double> labels{0, 0, 1};
  const auto w = ndcg_swap_weights(scores, labels);
  EXPECT_NEAR(w(2, 0), 1.0 - 0.5, 1e-15);
  EXPECT_NEAR(w(2, 1), 1.0 / std::log2(3.0) - 0.5, 1e-15);
  EXPECT_EQ(w(0, 1), 0.0);
}

TEST(Lambdarank, EqualScoresGiveHalfSigmaDelta) {
  const std::vector<double> scores{0.0, 0.0};
  const std::vector<double> labels{1, 0};
  const auto w = ndcg_swap_weights(scores, labels);
  for (double sigma : {1.0, 2.0}) {
    std::vector<double> grad(2), hess(2);
    pairwise_grad_hess(scores, labels, w, grad, hess, sigma);
    EXPECT_DOUBLE_EQ(std::abs(grad[0]), sigma / 2 * w(0, 1));
    EXPECT_LT(grad[0], 0.0);
    EXPECT_DOUBLE_EQ(grad[1], -grad[0]);
  }
}

TEST(Lambdarank, GroupsWithoutPairsAreZero) {
  const std::vector<double> scores{0.1, 0.5, -0.3, 1.0, 0.2, 0.0, 0.4, 0.3, 0.1, 0.9, 0.5, 0.6};
  const std::vector<double> labels{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  std::vector<double> grad(12, 7.0), hess(12, 7.0);
  const std::vector<RowGroup> groups{{0, 6}, {6, 6}};
  lambdarank_grad_hess(scores, labels, groups, grad, hess);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(grad[i], 0.0);
    EXPECT_EQ(hess[i], 0.0);
  }
  EXPECT_EQ(lambdarank_cost(scores, labels, groups), 0.0);
}

TEST(Lambdarank, ThreadInvariant) {
  std::vector<double> scores, labels;
  std::vector<RowGroup> groups;
  Rng rng(4);
  for (std::size_t g = 0; g < 200; ++g) {
    groups.push_back({g * 6, 6});
    const auto pos = rng.below(6);
    for (std::size_t k = 0; k < 6; ++k) {
      scores.push_back(rng.normal());
      labels.push_back(k == pos ? 1.0 : 0.0);
    }
  }
  std::vector<double> g1(scores.size()), h1(scores.size()), g8(scores.size()), h8(scores.size());
  set_num_threads(1);
  lambdarank_grad_hess(scores, labels, groups, g1, h1);
  set_num_threads(8);
  lambdarank_grad_hess(scores, labels, groups, g8, h8);
  set_num_threads(1);
  EXPECT_EQ(g1, g8);
  EXPECT_EQ(h1, h8);
}

}  // namespace
}  // namespace ctxrank::gbdt
