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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxrank/common.hpp"

namespace ctxrank {

// Every impression shows exactly this many candidates.
inline constexpr std::size_t kImpressionSize = 6;

struct ImpressionRow {
  std::string query_id;
  std::string user_id;
  std::string session_id;
  std::string context_product_id;
  std::string product_id;
  std::optional<std::int8_t> is_click;  // absent in unlabeled sets
  Day observation_date = 0;
  int user_tier = 0;
};

// Contiguous run of rows belonging to one query.
struct QueryGroup {
  std::string query_id;
  std::size_t begin = 0;
  std::size_t size = 0;
};

// Impression rows grouped contiguously by query, each query exactly
// kImpressionSize rows. Immutable once built.
class ImpressionTable {
 public:
  ImpressionTable() = default;

  // Groups rows by query_id in order of first appearance (stable within a
  // query) and rejects any query whose size differs from kImpressionSize.
  static ImpressionTable from_rows(std::vector<ImpressionRow> rows);

  std::span<const ImpressionRow> rows() const { return rows_; }
  const ImpressionRow& row(std::size_t i) const { return rows_[i]; }
  const std::vector<QueryGroup>& queries() const { return queries_; }
  std::size_t size() const { return rows_.size(); }
  std::size_t num_queries() const { return queries_.size(); }
  bool labeled() const { return labeled_; }

  std::optional<std::size_t> find_query(std::string_view query_id) const;
  // Subtable of whole queries, in the order given.
  ImpressionTable select_queries(std::span<const std::size_t> query_indices) const;

 private:
  std::vector<ImpressionRow> rows_;
  std::vector<QueryGroup> queries_;
  std::unordered_map<std::string, std::size_t> query_index_;
  bool labeled_ = false;
};

inline constexpr std::string_view kImpressionHeader =
    "query_id,user_id,session_id,context_product_id,product_id,is_click,"
    "observation_date,user_tier";

ImpressionTable load_impressions(const std::filesystem::path& path);
ImpressionTable parse_impressions(std::string text, const std::string& source_name);
std::string format_impressions(const ImpressionTable& table);
void write_impressions(const std::filesystem::path& path, const ImpressionTable& table);

// Per-product attributes in three families. Column names in the catalog
// file carry a kind prefix (cat_, list_, num_) that is stripped here.
class ProductCatalog {
 public:
  ProductCatalog() = default;
  ProductCatalog(std::vector<std::string> single_names,
                 std::vector<std::string> list_names,
                 std::vector<std::string> numeric_names);

  // Attribute vectors must match the declared counts.
  void add_product(std::string product_id, std::vector<std::string> singles,
                   std::vector<std::vector<std::string>> lists,
                   std::vector<double> numerics);

  std::size_t size() const { return product_ids_.size(); }
  const std::vector<std::string>& product_ids() const { return product_ids_; }
  std::optional<std::size_t> find(std::string_view product_id) const;

  const std::vector<std::string>& single_names() const { return single_names_; }
  const std::vector<std::string>& list_names() const { return list_names_; }
  const std::vector<std::string>& numeric_names() const { return numeric_names_; }
  std::size_t num_attributes() const {
    return single_names_.size() + list_names_.size() + numeric_names_.size();
  }

  std::optional<std::size_t> single_index(std::string_view name) const;
  std::optional<std::size_t> list_index(std::string_view name) const;
  std::optional<std::size_t> numeric_index(std::string_view name) const;

  // Empty string means missing.
  const std::string& single(std::size_t product, std::size_t attr) const {
    return singles_[attr][product];
  }
  const std::vector<std::string>& list(std::size_t product, std::size_t attr) const {
    return lists_[attr][product];
  }
  // NaN means missing.
  double numeric(std::size_t product, std::size_t attr) const {
    return numerics_[attr][product];
  }
  const std::vector<double>& numeric_column(std::size_t attr) const {
    return numerics_[attr];
  }
  const std::vector<std::string>& single_column(std::size_t attr) const {
    return singles_[attr];
  }
  const std::vector<std::vector<std::string>>& list_column(std::size_t attr) const {
    return lists_[attr];
  }

 private:
  std::vector<std::string> product_ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> single_names_, list_names_, numeric_names_;
  std::vector<std::vector<std::string>> singles_;                // [attr][product]
  std::vector<std::vector<std::vector<std::string>>> lists_;     // [attr][product]
  std::vector<std::vector<double>> numerics_;                    // [attr][product]
};

ProductCatalog load_catalog(const std::filesystem::path& path);
ProductCatalog parse_catalog(std::string text, const std::string& source_name);
std::string format_catalog(const ProductCatalog& catalog);
void write_catalog(const std::filesystem::path& path, const ProductCatalog& catalog);

// Product ids referenced by the table (as candidate or context) that do not
// resolve in the catalog, in first-reference order.
std::vector<std::string> unresolved_products(const ImpressionTable& table,
                                             const ProductCatalog& catalog);

// Label encoding for one categorical column: codes start at 1 in order of
// first appearance, 0 is reserved for unseen (and missing) values.
class LabelEncoder {
 public:
  int fit_value(std::string_view value);
  int transform(std::string_view value) const;
  const std::string& inverse(int code) const;  // throws std::out_of_range
  std::size_t size() const { return values_.size(); }
  const std::vector<std::string>& values() const { return values_; }

 private:
  std::unordered_map<std::string, int> codes_;
  std::vector<std::string> values_;
};

struct EncoderMap {
  std::map<std::string, LabelEncoder> columns;
  const LabelEncoder& at(std::string_view column) const;
};

// Impression categoricals: query_id, user_id, session_id,
// context_product_id, product_id, user_tier.
EncoderMap fit_label_encoder(const ImpressionTable& table,
                             std::span<const std::string> columns);
// Catalog categoricals: single-valued attributes (values) and list-valued
// attributes (tokens), named without their kind prefix.
EncoderMap fit_label_encoder(const ProductCatalog& catalog,
                             std::span<const std::string> columns);

struct SplitSpec {
  std::size_t n_val_queries = 0;
  std::uint64_t seed = 0;
};

struct TableSplit {
  ImpressionTable train;
  ImpressionTable val;
};

// Samples whole validation queries without replacement; both partitions
// keep the source query order.
TableSplit split_by_query(const ImpressionTable& table, const SplitSpec& spec);

}  // namespace ctxrank
