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
#include <optional>
#include <string>
#include <vector>

#include "ctxrank/common.hpp"
#include "ctxrank/dataset.hpp"

namespace ctxrank {

// Dense feature values aligned to impression rows. Missing values are NaN.
struct FeatureMatrix {
  RowMatrix values;
  std::vector<std::string> column_names;
  std::vector<QueryGroup> query_groups;

  std::size_t num_rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_columns() const { return column_names.size(); }
  std::optional<std::size_t> column(std::string_view name) const;
  // Throws ValidationError when absent.
  VectorXd column_values(std::string_view name) const;
};

// Click statistics come only from reference_table. Non-click statistics are
// taken over the pooled rows: the reference rows plus every featurized row
// whose query is not already in the reference.
struct FeatureContext {
  const ImpressionTable& reference_table;
  Day reference_date;
};

struct FeatureColumn {
  std::string name;
  VectorXd values;
};
using FeatureColumns = std::vector<FeatureColumn>;

// Clicks on the row's product in its session over all clicks in that
// session; 0 when the session has no clicks.
VectorXd session_click_proportion(const ImpressionTable& rows, const FeatureContext& ctx);

// Session price/start-date mean, max, min and in-session frequencies of the
// product, its brand and its main colour.
FeatureColumns session_aggregates(const ImpressionTable& rows, const ProductCatalog& catalog,
                                  const FeatureContext& ctx);

// Mean, max, min of price and start date over each query's candidates.
FeatureColumns query_aggregates(const ImpressionTable& rows, const ProductCatalog& catalog);

// Interacting users and impression count per product, plus the click-out
// variants: distinct clicking users, price and days elapsed at the last
// click, and click rate. Never-clicked products get NaN click-out values.
FeatureColumns global_static(const ImpressionTable& rows, const ProductCatalog& catalog,
                             const FeatureContext& ctx);

// Share of pooled rows (and of reference clicks) carrying the row's brand,
// category and main colour.
FeatureColumns popularity_rates(const ImpressionTable& rows, const ProductCatalog& catalog,
                                const FeatureContext& ctx);

// Price and start-date aggregates per user tier, over all pooled rows and
// over clicked reference rows.
FeatureColumns user_tier_aggregates(const ImpressionTable& rows, const ProductCatalog& catalog,
                                    const FeatureContext& ctx);

// 1-based rank of price and start date inside each query, ascending, ties
// (and missing values, which sort last) broken by product_id.
FeatureColumns rank_within_impression(const ImpressionTable& rows,
                                      const ProductCatalog& catalog);

// Row value minus session, query, user-tier and clicked-product means.
FeatureColumns difference_features(const ImpressionTable& rows, const ProductCatalog& catalog,
                                   const FeatureContext& ctx);

// Clicked-product statistics of the row's calendar week (weeks counted from
// 1970-01-01).
FeatureColumns weekly_features(const ImpressionTable& rows, const ProductCatalog& catalog,
                               const FeatureContext& ctx);

// Documented column order of build_feature_matrix for this catalog.
std::vector<std::string> feature_column_names(const ProductCatalog& catalog, bool include_pcs);

// `encoder` must hold every single-valued catalog attribute. Pass a pcs
// column to append it as the last feature.
FeatureMatrix build_feature_matrix(const ImpressionTable& rows, const ProductCatalog& catalog,
                                   const EncoderMap& encoder, const FeatureContext& ctx,
                                   const VectorXd* pcs_column = nullptr);

// Featurizes a labeled table against itself without using a row's own
// query labels: queries are dealt into `folds` groups and each group is
// featurized with the other groups as click reference.
FeatureMatrix build_feature_matrix_out_of_fold(const ImpressionTable& rows,
                                               const ProductCatalog& catalog,
                                               const EncoderMap& encoder, Day reference_date,
                                               std::size_t folds, std::uint64_t seed,
                                               const VectorXd* pcs_column = nullptr);

// Header row of column names, one line per row, NaN as an empty cell.
std::string format_feature_matrix(const FeatureMatrix& matrix);
void write_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& matrix);

}  // namespace ctxrank
