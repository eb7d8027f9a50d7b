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

#include <numeric>
#include <optional>
#include <vector>

#include "ctxrank/histogram.hpp"
#include "ctxrank/parallel.hpp"
#include "oracles.hpp"

namespace ctxrank::gbdt {
namespace {

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> r(n);
  std::iota(r.begin(), r.end(), 0u);
  return r;
}

std::vector<std::size_t> all_features(std::size_t n) {
  std::vector<std::size_t> f(n);
  std::iota(f.begin(), f.end(), std::size_t{0});
  return f;
}

TEST(Regularization, GainAndLeafExamples) {
  EXPECT_DOUBLE_EQ(split_gain(-4.0, 2.0, 4.0, 2.0, 2.0, 0.0), 4.0);
  EXPECT_DOUBLE_EQ(leaf_weight(4.0, 2.0, 2.0, 0.0), -1.0);
  // Identical children: 0.5 * (9/3 + 9/3 - 36/5); lambda makes the merge win.
  EXPECT_DOUBLE_EQ(split_gain(3.0, 2.0, 3.0, 2.0, 1.0, 0.0), -0.6);
  for (double g : {-0.5, 0.0, 0.3, 0.5}) EXPECT_EQ(leaf_weight(g, 2.0, 1.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(leaf_weight(3.0, 1.0, 1.0, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(leaf_weight(-3.0, 1.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(leaf_weight(4.0f, 2.0f, 2.0f, 0.0f), -1.0f);
}

TEST(Regularization, LambdaShrinksWeightsMonotonically) {
  for (double g : {-7.0, 0.4, 12.0}) {
    double prev = std::abs(leaf_weight(g, 3.0, 0.0, 0.0));
    for (double lambda = 0.5; lambda < 1e7; lambda *= 3.0) {
      const double w = std::abs(leaf_weight(g, 3.0, lambda, 0.0));
      EXPECT_LE(w, prev);
      prev = w;
    }
    EXPECT_LT(prev, 1e-5);
  }
}

TEST(Bins, DistinctValuesAndMissingBin) {
  const std::vector<double> v{3.0, 1.0, kMissing, 2.0, 3.0};
  const auto m = fit_bins(v, 256, 0, 0);
  EXPECT_EQ(m.cuts, (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(m.bin(kMissing), 0);
  EXPECT_EQ(m.bin(1.0), 1);
  EXPECT_EQ(m.bin(1.5), 2);
  EXPECT_EQ(m.bin(3.0), 3);
  EXPECT_EQ(m.bin(99.0), 3);
  EXPECT_EQ(m.bin(-99.0), 1);
  EXPECT_TRUE(fit_bins(std::vector<double>{kMissing}, 16, 0, 0).cuts.empty());
  EXPECT_THROW(fit_bins(v, 1, 0, 0), ValidationError);
}

TEST(Bins, QuantileCutsEndAtColumnMax) {
  std::vector<double> v;
  Rng rng(1);
  for (int i = 0; i < 5000; ++i) v.push_back(rng.normal());
  for (std::size_t sample : {0u, 500u}) {
    const auto m = fit_bins(v, 32, sample, 9);
    EXPECT_LE(m.num_bins(), 32u);
    EXPECT_EQ(m.cuts.back(), *std::max_element(v.begin(), v.end()));
    EXPECT_TRUE(std::is_sorted(m.cuts.begin(), m.cuts.end()));
    // x <= cut[b-1] exactly when bin(x) <= b.
    for (double x : v)
      for (std::size_t b = 1; b <= m.cuts.size(); ++b)
        ASSERT_EQ(x <= m.cuts[b - 1], m.bin(x) <= b);
  }
}

TEST(Histograms, SingletonAndConservation) {
  RowMatrix x(1, 1);
  x << 2.5;
  auto bm = bin_matrix(x, 256, 0, 0);
  const std::vector<double> g{-0.75}, h{0.5};
  const auto rows = all_rows(1);
  const auto feats = all_features(1);
  auto hist = build_histograms(bm, g, h, rows, feats);
  EXPECT_EQ(hist[0][bm.bins[0][0]].grad, -0.75);
  EXPECT_EQ(hist[0][bm.bins[0][0]].hess, 0.5);
  EXPECT_EQ(hist[0][bm.bins[0][0]].count, 1u);

  Rng rng(2);
  RowMatrix y(400, 5);
  std::vector<double> gg(400), hh(400);
  for (Eigen::Index i = 0; i < 400; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) y(i, j) = rng.uniform() < 0.1 ? kMissing : rng.normal();
    gg[static_cast<std::size_t>(i)] = rng.normal();
    hh[static_cast<std::size_t>(i)] = rng.uniform();
  }
  bm = bin_matrix(y, 16, 0, 0);
  std::vector<std::uint32_t> sample;
  for (std::uint32_t r = 0; r < 400; r += 3) sample.push_back(r);
  const auto f5 = all_features(5);
  hist = build_histograms(bm, gg, hh, sample, f5);
  double gs = 0.0, hs = 0.0;
  for (auto r : sample) {
    gs += gg[r];
    hs += hh[r];
  }
  for (const auto& feature : hist) {
    double g2 = 0.0, h2 = 0.0;
    std::uint32_t c = 0;
    for (const auto& cell : feature) {
      g2 += cell.grad;
      h2 += cell.hess;
      c += cell.count;
    }
    EXPECT_NEAR(g2, gs, 1e-9);
    EXPECT_NEAR(h2, hs, 1e-9);
    EXPECT_EQ(c, sample.size());
  }

  // Subtraction recovers the sibling.
  std::vector<std::uint32_t> left, right;
  for (auto r : sample) (y(r, 0) < 0.0 ? left : right).push_back(r);
  const auto hl = build_histograms(bm, gg, hh, left, f5);
  const auto hr = build_histograms(bm, gg, hh, right, f5);
  const auto diff = subtract_histograms(hist, hl);
  for (std::size_t f = 0; f < 5; ++f)
    for (std::size_t b = 0; b < diff[f].size(); ++b) {
      EXPECT_EQ(diff[f][b].count, hr[f][b].count);
      EXPECT_NEAR(diff[f][b].grad, hr[f][b].grad, 1e-9);
    }
}

TEST(Histograms, ThreadInvariant) {
  Rng rng(5);
  RowMatrix y(2000, 7);
  std::vector<double> g(2000), h(2000);
  for (Eigen::Index i = 0; i < 2000; ++i) {
    for (Eigen::Index j = 0; j < 7; ++j) y(i, j) = rng.normal();
    g[static_cast<std::size_t>(i)] = rng.normal();
    h[static_cast<std::size_t>(i)] = rng.uniform();
  }
  const auto rows = all_rows(2000);
  const auto feats = all_features(7);
  set_num_threads(1);
  const auto bm1 = bin_matrix(y, 64, 0, 0);
  const auto a = build_histograms(bm1, g, h, rows, feats);
  set_num_threads(8);
  const auto bm8 = bin_matrix(y, 64, 0, 0);
  const auto b = build_histograms(bm8, g, h, rows, feats);
  set_num_threads(1);
  EXPECT_EQ(bm1.bins, bm8.bins);
  for (std::size_t f = 0; f < 7; ++f)
    for (std::size_t k = 0; k < a[f].size(); ++k) {
      EXPECT_EQ(a[f][k].grad, b[f][k].grad);
      EXPECT_EQ(a[f][k].hess, b[f][k].hess);
    }
}

TEST(BestSplit, MatchesBruteForceOnSmallInstances) {
  Rng rng(17);
  int found = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto inst = testing::random_split_instance(rng, trial);
    bool has_split = false;
    EXPECT_EQ(testing::compare_with_brute_force(inst, &has_split), "") << "trial " << trial;
    found += has_split;
  }
  EXPECT_GT(found, 200);
}

TEST(BestSplit, SymmetricChildrenGiveNoSplit) {
  RowMatrix x(2, 1);
  x << 0.0, 1.0;
  const std::vector<double> g{1.0, 1.0}, h{1.0, 1.0};
  const auto bm = bin_matrix(x, 256, 0, 0);
  const auto rows = all_rows(2);
  const auto feats = all_features(1);
  SplitParams p;
  p.min_split_gain = 1e-9;
  EXPECT_FALSE(best_split(build_histograms(bm, g, h, rows, feats), bm.mappers, feats, p));
}

}  // namespace
}  // namespace ctxrank::gbdt
