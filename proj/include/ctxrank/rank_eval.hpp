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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxrank/common.hpp"
#include "ctxrank/dataset.hpp"

namespace ctxrank {

inline constexpr double kDefaultThreshold = 0.51;

// Model output for one query's candidates, in any order.
struct ScoredImpression {
  std::string query_id;
  std::vector<std::string> product_ids;
  std::vector<double> scores;
  std::vector<double> pcs;  // NaN for unknown
};

struct RankedImpression {
  std::string query_id;
  std::vector<std::string> product_ids;  // rank 1 first
  std::vector<double> scores;
  std::vector<double> pcs;
  bool filter_applied = false;
};

// When max(pcs) >= threshold the candidates are ordered by pcs alone,
// otherwise by score; both descending, ties by score descending then
// product_id ascending. Missing pcs counts as 0, a NaN score sorts last.
// Throws ValidationError unless there are exactly 6 candidates.
RankedImpression rank_impression(const ScoredImpression& impression, double threshold);
std::vector<RankedImpression> rank_all(std::span<const ScoredImpression> impressions,
                                       double threshold);

// Groups per-row scores and pcs by query in table order. Both are quantized
// to 9 significant digits, the precision of the predictions file, so
// re-evaluating a written file reproduces in-process results exactly.
std::vector<ScoredImpression> group_scores(const ImpressionTable& rows,
                                           std::span<const double> scores,
                                           std::span<const double> pcs);

// Clicked product ids per query; labeled queries without clicks map to an
// empty list.
using ClickLabels = std::unordered_map<std::string, std::vector<std::string>>;
ClickLabels click_labels(const ImpressionTable& rows);

struct MrrResult {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // queries with no click
};

// Mean over queries with at least one click of 1 / (position of the first
// clicked product). Throws ValidationError for a query absent from labels.
MrrResult mrr(std::span<const RankedImpression> rankings, const ClickLabels& labels);

struct ThresholdPoint {
  double threshold = 0.0;
  double mrr = 0.0;
};

struct ThresholdCurve {
  std::vector<ThresholdPoint> points;
  // Lowest threshold attaining the maximum.
  double best_threshold = 0.0;
  double best_mrr = 0.0;
};

// Grid must be non-empty, finite and strictly increasing.
ThresholdCurve threshold_sweep(std::span<const ScoredImpression> impressions,
                               const ClickLabels& labels, std::span<const double> grid);

// "lo:hi:step", inclusive of hi up to rounding.
std::vector<double> parse_grid(std::string_view spec);
std::vector<double> default_grid();

inline constexpr std::string_view kPredictionsHeader =
    "query_id,product_id,rank,score,pcs,filter_applied";
std::string format_predictions(std::span<const RankedImpression> rankings);
void write_predictions(const std::filesystem::path& path,
                       std::span<const RankedImpression> rankings);
// Reads a predictions file back into per-query scored candidates.
std::vector<ScoredImpression> parse_predictions(std::string text, const std::string& source);
std::vector<ScoredImpression> load_predictions(const std::filesystem::path& path);

std::string format_sweep(const ThresholdCurve& curve);

}  // namespace ctxrank
