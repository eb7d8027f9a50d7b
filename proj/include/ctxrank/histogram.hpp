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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ctxrank/common.hpp"

namespace ctxrank::gbdt {

template <typename Scalar>
Scalar soft_threshold(Scalar g, Scalar alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return Scalar(0);
}

// -soft_threshold(G, alpha) / (H + lambda); 0 when the denominator is 0.
template <typename Scalar>
Scalar leaf_weight(Scalar g, Scalar h, Scalar reg_lambda, Scalar reg_alpha) {
  const Scalar denom = h + reg_lambda;
  if (!(denom > Scalar(0))) return Scalar(0);
  return -soft_threshold(g, reg_alpha) / denom;
}

// T(G)^2 / (H + lambda), the structure score of one node.
template <typename Scalar>
Scalar node_score(Scalar g, Scalar h, Scalar reg_lambda, Scalar reg_alpha) {
  const Scalar denom = h + reg_lambda;
  if (!(denom > Scalar(0))) return Scalar(0);
  const Scalar t = soft_threshold(g, reg_alpha);
  return t * t / denom;
}

template <typename Scalar>
Scalar split_gain(Scalar gl, Scalar hl, Scalar gr, Scalar hr, Scalar reg_lambda,
                  Scalar reg_alpha) {
  return Scalar(0.5) * (node_score(gl, hl, reg_lambda, reg_alpha) +
                        node_score(gr, hr, reg_lambda, reg_alpha) -
                        node_score(gl + gr, hl + hr, reg_lambda, reg_alpha));
}

// Bin 0 holds missing values; bin b >= 1 holds values in
// (cuts[b-2], cuts[b-1]]. The last cut is the column maximum, so every
// finite value lands in a bin.
struct BinMapper {
  std::vector<double> cuts;

  std::size_t num_bins() const { return cuts.size() + 1; }
  std::uint16_t bin(double v) const;
};

// Cuts are the distinct values when there are at most max_bins - 1 of them,
// otherwise quantiles of a row sample of size sample_size (all rows when 0).
BinMapper fit_bins(std::span<const double> values, std::size_t max_bins,
                   std::size_t sample_size, std::uint64_t seed);

// Feature-major bin indices.
struct BinnedMatrix {
  std::size_t num_rows = 0;
  std::vector<BinMapper> mappers;
  std::vector<std::vector<std::uint16_t>> bins;

  std::size_t num_features() const { return mappers.size(); }
};

BinnedMatrix bin_matrix(const RowMatrix& values, std::size_t max_bins, std::size_t sample_size,
                        std::uint64_t seed);

struct HistBin {
  double grad = 0.0;
  double hess = 0.0;
  std::uint32_t count = 0;
};

// One bin vector per feature; features outside the column sample stay empty.
using Histogram = std::vector<std::vector<HistBin>>;

// Accumulates grad/hess/count of `rows` (in the given order) for each
// listed feature. Each feature is summed by one thread, so the result does
// not depend on the thread count.
Histogram build_histograms(const BinnedMatrix& matrix, std::span<const double> grad,
                           std::span<const double> hess, std::span<const std::uint32_t> rows,
                           std::span<const std::size_t> features);

// parent - child, bin by bin, for the features present in parent.
Histogram subtract_histograms(const Histogram& parent, const Histogram& child);

struct SplitParams {
  double reg_lambda = 1.0;
  double reg_alpha = 0.0;
  double min_child_weight = 0.0;
  double min_split_gain = 0.0;
  std::size_t min_child_samples = 1;
};

// Rows go left when their bin is in 1..bin, missing rows follow
// default_left. threshold is the matching raw-value bound (x <= threshold).
struct SplitDecision {
  std::size_t feature = 0;
  std::size_t bin = 0;
  double threshold = 0.0;
  bool default_left = false;
  double gain = 0.0;
  HistBin left;
  HistBin right;
};

// Max-gain split over `features` with gain > min_split_gain, both children
// holding hessian >= min_child_weight and >= min_child_samples rows. For
// each threshold the missing-right assignment is scored first and missing-
// left replaces it only when strictly better; ties between thresholds and
// features keep the lower index.
std::optional<SplitDecision> best_split(const Histogram& histogram,
                                        std::span<const BinMapper> mappers,
                                        std::span<const std::size_t> features,
                                        const SplitParams& params);

}  // namespace ctxrank::gbdt
