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

#include "ctxrank/histogram.hpp"

#include <algorithm>
#include <numeric>

#include "ctxrank/parallel.hpp"

namespace ctxrank::gbdt {

std::uint16_t BinMapper::bin(double v) const {
  if (is_missing(v) || cuts.empty()) return 0;
  const auto it = std::lower_bound(cuts.begin(), cuts.end(), v);
  const auto idx = static_cast<std::size_t>(it - cuts.begin());
  return static_cast<std::uint16_t>(std::min(idx, cuts.size() - 1) + 1);
}

BinMapper fit_bins(std::span<const double> values, std::size_t max_bins,
                   std::size_t sample_size, std::uint64_t seed) {
  if (max_bins < 2 || max_bins > 65535)
    throw ValidationError("histogram_bins must be in [2, 65535]");
  BinMapper mapper;
  double column_max = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double v : values)
    if (!is_missing(v)) {
      column_max = std::max(column_max, v);
      any = true;
    }
  if (!any) return mapper;

  std::vector<double> sample;
  if (sample_size > 0 && values.size() > sample_size) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < sample_size; ++i)
      std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    sample.reserve(sample_size);
    for (std::size_t i = 0; i < sample_size; ++i)
      if (!is_missing(values[idx[i]])) sample.push_back(values[idx[i]]);
  } else {
    for (double v : values)
      if (!is_missing(v)) sample.push_back(v);
  }
  std::sort(sample.begin(), sample.end());

  std::vector<double> distinct(sample);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const std::size_t value_bins = max_bins - 1;
  if (distinct.size() <= value_bins) {
    mapper.cuts = std::move(distinct);
  } else {
    const std::size_t n = sample.size();
    for (std::size_t k = 1; k <= value_bins; ++k) {
      const std::size_t pos = (k * n + value_bins - 1) / value_bins - 1;
      const double cut = sample[std::min(pos, n - 1)];
      if (mapper.cuts.empty() || cut > mapper.cuts.back()) mapper.cuts.push_back(cut);
    }
  }
  if (mapper.cuts.empty() || column_max > mapper.cuts.back()) {
    if (mapper.cuts.size() == value_bins)
      mapper.cuts.back() = column_max;
    else
      mapper.cuts.push_back(column_max);
  }
  return mapper;
}

BinnedMatrix bin_matrix(const RowMatrix& values, std::size_t max_bins, std::size_t sample_size,
                        std::uint64_t seed) {
  BinnedMatrix out;
  out.num_rows = static_cast<std::size_t>(values.rows());
  const auto n_features = static_cast<std::size_t>(values.cols());
  out.mappers.resize(n_features);
  out.bins.resize(n_features);
  parallel_for(n_features, [&](std::size_t b, std::size_t e) {
    std::vector<double> column(out.num_rows);
    for (std::size_t f = b; f < e; ++f) {
      for (std::size_t r = 0; r < out.num_rows; ++r)
        column[r] = values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f));
      // the same row sample for every feature
      out.mappers[f] = fit_bins(column, max_bins, sample_size, seed);
      auto& bins = out.bins[f];
      bins.resize(out.num_rows);
      for (std::size_t r = 0; r < out.num_rows; ++r) bins[r] = out.mappers[f].bin(column[r]);
    }
  });
  return out;
}

Histogram build_histograms(const BinnedMatrix& matrix, std::span<const double> grad,
                           std::span<const double> hess, std::span<const std::uint32_t> rows,
                           std::span<const std::size_t> features) {
  Histogram hist(matrix.num_features());
  parallel_for(features.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t f = features[k];
      auto& bins = hist[f];
      bins.assign(matrix.mappers[f].num_bins(), HistBin{});
      const auto& column = matrix.bins[f];
      for (std::uint32_t r : rows) {
        HistBin& cell = bins[column[r]];
        cell.grad += grad[r];
        cell.hess += hess[r];
        ++cell.count;
      }
    }
  });
  return hist;
}

Histogram subtract_histograms(const Histogram& parent, const Histogram& child) {
  Histogram out(parent.size());
  for (std::size_t f = 0; f < parent.size(); ++f) {
    if (parent[f].empty()) continue;
    out[f].resize(parent[f].size());
    for (std::size_t b = 0; b < parent[f].size(); ++b) {
      out[f][b].grad = parent[f][b].grad - child[f][b].grad;
      out[f][b].hess = parent[f][b].hess - child[f][b].hess;
      out[f][b].count = parent[f][b].count - child[f][b].count;
    }
  }
  return out;
}

namespace {

HistBin operator+(const HistBin& a, const HistBin& b) {
  return {a.grad + b.grad, a.hess + b.hess, a.count + b.count};
}
HistBin operator-(const HistBin& a, const HistBin& b) {
  return {a.grad - b.grad, a.hess - b.hess, a.count - b.count};
}

bool admissible(const HistBin& side, const SplitParams& p) {
  return side.count >= std::max<std::size_t>(p.min_child_samples, 1) &&
         side.hess >= p.min_child_weight;
}

}  // namespace

std::optional<SplitDecision> best_split(const Histogram& histogram,
                                        std::span<const BinMapper> mappers,
                                        std::span<const std::size_t> features,
                                        const SplitParams& params) {
  std::vector<std::size_t> order(features.begin(), features.end());
  std::sort(order.begin(), order.end());
  std::optional<SplitDecision> best;
  for (std::size_t f : order) {
    const auto& bins = histogram[f];
    if (bins.size() < 2) continue;
    HistBin total;
    for (const auto& cell : bins) total = total + cell;
    const HistBin missing = bins[0];
    const double parent = node_score(total.grad, total.hess, params.reg_lambda, params.reg_alpha);

    auto score = [&](const HistBin& l, const HistBin& r) -> std::optional<double> {
      if (!admissible(l, params) || !admissible(r, params)) return std::nullopt;
      const double gain =
          0.5 * (node_score(l.grad, l.hess, params.reg_lambda, params.reg_alpha) +
                 node_score(r.grad, r.hess, params.reg_lambda, params.reg_alpha) - parent);
      if (!(gain > params.min_split_gain)) return std::nullopt;
      return gain;
    };

    HistBin prefix;
    for (std::size_t b = 1; b < bins.size(); ++b) {
      prefix = prefix + bins[b];
      // missing rows to the right
      HistBin left = prefix;
      HistBin right = total - left;
      bool default_left = false;
      std::optional<double> gain = score(left, right);
      if (missing.count > 0) {
        const HistBin l2 = prefix + missing;
        const HistBin r2 = total - l2;
        const auto g2 = score(l2, r2);
        if (g2 && (!gain || *g2 > *gain)) {
          gain = g2;
          left = l2;
          right = r2;
          default_left = true;
        }
      }
      if (!gain) continue;
      if (!best || *gain > best->gain) {
        best = SplitDecision{f, b, mappers[f].cuts[b - 1], default_left, *gain, left, right};
      }
    }
  }
  return best;
}

}  // namespace ctxrank::gbdt
