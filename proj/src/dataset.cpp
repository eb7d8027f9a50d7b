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

#include "ctxrank/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "ctxrank/csv.hpp"
#include "ctxrank/parallel.hpp"

namespace ctxrank {

// ---------------------------------------------------------------------------
// ImpressionTable

ImpressionTable ImpressionTable::from_rows(std::vector<ImpressionRow> rows) {
  ImpressionTable t;
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto [it, inserted] = t.query_index_.try_emplace(rows[i].query_id, order.size());
    if (inserted) {
      order.push_back(rows[i].query_id);
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }
  for (std::size_t q = 0; q < order.size(); ++q) {
    if (members[q].size() != kImpressionSize) {
      throw ValidationError("query '" + order[q] + "' has " +
                            std::to_string(members[q].size()) + " rows, expected " +
                            std::to_string(kImpressionSize));
    }
  }
  t.rows_.reserve(rows.size());
  t.queries_.reserve(order.size());
  t.labeled_ = !rows.empty();
  for (std::size_t q = 0; q < order.size(); ++q) {
    t.queries_.push_back({order[q], t.rows_.size(), members[q].size()});
    for (std::size_t i : members[q]) {
      t.labeled_ = t.labeled_ && rows[i].is_click.has_value();
      t.rows_.push_back(std::move(rows[i]));
    }
  }
  return t;
}

std::optional<std::size_t> ImpressionTable::find_query(std::string_view query_id) const {
  auto it = query_index_.find(std::string(query_id));
  if (it == query_index_.end()) return std::nullopt;
  return it->second;
}

ImpressionTable ImpressionTable::select_queries(
    std::span<const std::size_t> query_indices) const {
  std::vector<ImpressionRow> rows;
  rows.reserve(query_indices.size() * kImpressionSize);
  for (std::size_t q : query_indices) {
    const auto& g = queries_.at(q);
    for (std::size_t i = g.begin; i < g.begin + g.size; ++i) rows.push_back(rows_[i]);
  }
  return from_rows(std::move(rows));
}

// ---------------------------------------------------------------------------
// Impression file I/O

ImpressionTable parse_impressions(std::string text, const std::string& source_name) {
  const auto table = csv::Table::parse(std::move(text), source_name);
  const std::size_t c_query = table.require_column("query_id");
  const std::size_t c_user = table.require_column("user_id");
  const std::size_t c_session = table.require_column("session_id");
  const std::size_t c_context = table.require_column("context_product_id");
  const std::size_t c_product = table.require_column("product_id");
  const std::optional<std::size_t> c_click = table.column("is_click");
  const std::size_t c_date = table.require_column("observation_date");
  const std::size_t c_tier = table.require_column("user_tier");

  std::vector<ImpressionRow> rows(table.num_rows());
  std::vector<std::string> errors(table.num_rows());
  parallel_for(rows.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& f = table.row(i);
      auto& r = rows[i];
      try {
        r.query_id = f[c_query];
        r.user_id = f[c_user];
        r.session_id = f[c_session];
        r.context_product_id = f[c_context];
        r.product_id = f[c_product];
        if (r.query_id.empty() || r.product_id.empty())
          throw ValidationError("empty query_id or product_id");
        if (c_click && !f[*c_click].empty()) {
          const auto v = f[*c_click];
          if (v != "0" && v != "1")
            throw ValidationError("is_click must be 0 or 1, found '" + std::string(v) + "'");
          r.is_click = static_cast<std::int8_t>(v == "1");
        }
        r.observation_date = parse_date(f[c_date]);
        r.user_tier = static_cast<int>(parse_int(f[c_tier]));
      } catch (const ValidationError& err) {
        errors[i] = err.what();
      }
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty())
      throw ValidationError(source_name + " line " + std::to_string(table.line_number(i)) +
                            ": " + errors[i]);
  }
  try {
    return ImpressionTable::from_rows(std::move(rows));
  } catch (const ValidationError& err) {
    throw ValidationError(source_name + ": " + err.what());
  }
}

ImpressionTable load_impressions(const std::filesystem::path& path) {
  return parse_impressions(csv::read_file(path), path.string());
}

std::string format_impressions(const ImpressionTable& table) {
  std::string out(kImpressionHeader);
  out += '\n';
  for (const auto& r : table.rows()) {
    out += r.query_id;
    out += ',';
    out += r.user_id;
    out += ',';
    out += r.session_id;
    out += ',';
    out += r.context_product_id;
    out += ',';
    out += r.product_id;
    out += ',';
    if (r.is_click) out += (*r.is_click ? '1' : '0');
    out += ',';
    out += format_date(r.observation_date);
    out += ',';
    out += std::to_string(r.user_tier);
    out += '\n';
  }
  return out;
}

void write_impressions(const std::filesystem::path& path, const ImpressionTable& table) {
  csv::write_file(path, format_impressions(table));
}

// ---------------------------------------------------------------------------
// ProductCatalog

ProductCatalog::ProductCatalog(std::vector<std::string> single_names,
                               std::vector<std::string> list_names,
                               std::vector<std::string> numeric_names)
    : single_names_(std::move(single_names)),
      list_names_(std::move(list_names)),
      numeric_names_(std::move(numeric_names)),
      singles_(single_names_.size()),
      lists_(list_names_.size()),
      numerics_(numeric_names_.size()) {}

void ProductCatalog::add_product(std::string product_id, std::vector<std::string> singles,
                                 std::vector<std::vector<std::string>> lists,
                                 std::vector<double> numerics) {
  if (singles.size() != single_names_.size() || lists.size() != list_names_.size() ||
      numerics.size() != numeric_names_.size())
    throw ValidationError("product '" + product_id + "': attribute count mismatch");
  if (!index_.try_emplace(product_id, product_ids_.size()).second)
    throw ValidationError("duplicate product_id '" + product_id + "'");
  product_ids_.push_back(std::move(product_id));
  for (std::size_t a = 0; a < singles.size(); ++a) singles_[a].push_back(std::move(singles[a]));
  for (std::size_t a = 0; a < lists.size(); ++a) lists_[a].push_back(std::move(lists[a]));
  for (std::size_t a = 0; a < numerics.size(); ++a) numerics_[a].push_back(numerics[a]);
}

std::optional<std::size_t> ProductCatalog::find(std::string_view product_id) const {
  auto it = index_.find(std::string(product_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {
std::optional<std::size_t> index_of(const std::vector<std::string>& names,
                                    std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}
}  // namespace

std::optional<std::size_t> ProductCatalog::single_index(std::string_view name) const {
  return index_of(single_names_, name);
}
std::optional<std::size_t> ProductCatalog::list_index(std::string_view name) const {
  return index_of(list_names_, name);
}
std::optional<std::size_t> ProductCatalog::numeric_index(std::string_view name) const {
  return index_of(numeric_names_, name);
}

ProductCatalog parse_catalog(std::string text, const std::string& source_name) {
  const auto table = csv::Table::parse(std::move(text), source_name);
  const std::size_t c_id = table.require_column("product_id");
  std::vector<std::string> singles, lists, numerics;
  std::vector<std::size_t> c_singles, c_lists, c_numerics;
  const auto& header = table.header();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == c_id) continue;
    const std::string& h = header[c];
    if (h.starts_with("cat_")) {
      singles.push_back(h.substr(4));
      c_singles.push_back(c);
    } else if (h.starts_with("list_")) {
      lists.push_back(h.substr(5));
      c_lists.push_back(c);
    } else if (h.starts_with("num_")) {
      numerics.push_back(h.substr(4));
      c_numerics.push_back(c);
    } else {
      throw ValidationError(source_name + ": column '" + h +
                            "' lacks a cat_/list_/num_ kind prefix");
    }
  }
  ProductCatalog catalog(singles, lists, numerics);
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    const auto& f = table.row(i);
    try {
      std::vector<std::string> s;
      for (auto c : c_singles) s.emplace_back(f[c]);
      std::vector<std::vector<std::string>> l;
      for (auto c : c_lists) {
        std::vector<std::string> tokens;
        if (!f[c].empty())
          for (auto tok : csv::split(f[c], '|')) tokens.emplace_back(tok);
        l.push_back(std::move(tokens));
      }
      std::vector<double> n;
      for (auto c : c_numerics) n.push_back(f[c].empty() ? kMissing : parse_double(f[c]));
      catalog.add_product(std::string(f[c_id]), std::move(s), std::move(l), std::move(n));
    } catch (const ValidationError& err) {
      throw ValidationError(source_name + " line " + std::to_string(table.line_number(i)) +
                            ": " + err.what());
    }
  }
  return catalog;
}

ProductCatalog load_catalog(const std::filesystem::path& path) {
  return parse_catalog(csv::read_file(path), path.string());
}

std::string format_catalog(const ProductCatalog& catalog) {
  std::string out = "product_id";
  for (const auto& n : catalog.single_names()) out += ",cat_" + n;
  for (const auto& n : catalog.list_names()) out += ",list_" + n;
  for (const auto& n : catalog.numeric_names()) out += ",num_" + n;
  out += '\n';
  for (std::size_t p = 0; p < catalog.size(); ++p) {
    out += catalog.product_ids()[p];
    for (std::size_t a = 0; a < catalog.single_names().size(); ++a) {
      out += ',';
      out += catalog.single(p, a);
    }
    for (std::size_t a = 0; a < catalog.list_names().size(); ++a) {
      out += ',';
      const auto& tokens = catalog.list(p, a);
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (t) out += '|';
        out += tokens[t];
      }
    }
    for (std::size_t a = 0; a < catalog.numeric_names().size(); ++a) {
      out += ',';
      const double v = catalog.numeric(p, a);
      if (!is_missing(v)) out += format_exact(v);
    }
    out += '\n';
  }
  return out;
}

void write_catalog(const std::filesystem::path& path, const ProductCatalog& catalog) {
  csv::write_file(path, format_catalog(catalog));
}

std::vector<std::string> unresolved_products(const ImpressionTable& table,
                                             const ProductCatalog& catalog) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  auto check = [&](const std::string& id) {
    if (!catalog.find(id) && seen.insert(id).second) out.push_back(id);
  };
  for (const auto& r : table.rows()) {
    check(r.product_id);
    check(r.context_product_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label encoding

int LabelEncoder::fit_value(std::string_view value) {
  if (value.empty()) return 0;
  auto [it, inserted] =
      codes_.try_emplace(std::string(value), static_cast<int>(values_.size()) + 1);
  if (inserted) values_.emplace_back(value);
  return it->second;
}

int LabelEncoder::transform(std::string_view value) const {
  auto it = codes_.find(std::string(value));
  return it == codes_.end() ? 0 : it->second;
}

const std::string& LabelEncoder::inverse(int code) const {
  if (code < 1 || static_cast<std::size_t>(code) > values_.size())
    throw std::out_of_range("label code " + std::to_string(code) + " not assigned");
  return values_[static_cast<std::size_t>(code) - 1];
}

const LabelEncoder& EncoderMap::at(std::string_view column) const {
  auto it = columns.find(std::string(column));
  if (it == columns.end())
    throw ValidationError("no encoder for column '" + std::string(column) + "'");
  return it->second;
}

EncoderMap fit_label_encoder(const ImpressionTable& table,
                             std::span<const std::string> columns) {
  EncoderMap out;
  for (const auto& name : columns) {
    if (name == "is_click" || name == "observation_date")
      throw ValidationError("column '" + name + "' is numeric");
    const std::string ImpressionRow::*member = nullptr;
    if (name == "query_id") member = &ImpressionRow::query_id;
    else if (name == "user_id") member = &ImpressionRow::user_id;
    else if (name == "session_id") member = &ImpressionRow::session_id;
    else if (name == "context_product_id") member = &ImpressionRow::context_product_id;
    else if (name == "product_id") member = &ImpressionRow::product_id;
    else if (name != "user_tier")
      throw ValidationError("column '" + name + "' not found");
    LabelEncoder enc;
    for (const auto& r : table.rows())
      enc.fit_value(member ? r.*member : std::to_string(r.user_tier));
    out.columns.emplace(name, std::move(enc));
  }
  return out;
}

EncoderMap fit_label_encoder(const ProductCatalog& catalog,
                             std::span<const std::string> columns) {
  EncoderMap out;
  for (const auto& name : columns) {
    LabelEncoder enc;
    if (auto a = catalog.single_index(name)) {
      for (const auto& v : catalog.single_column(*a)) enc.fit_value(v);
    } else if (auto l = catalog.list_index(name)) {
      for (const auto& tokens : catalog.list_column(*l))
        for (const auto& t : tokens) enc.fit_value(t);
    } else if (catalog.numeric_index(name)) {
      throw ValidationError("column '" + name + "' is numeric");
    } else {
      throw ValidationError("column '" + name + "' not found");
    }
    out.columns.emplace(name, std::move(enc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split

TableSplit split_by_query(const ImpressionTable& table, const SplitSpec& spec) {
  const std::size_t n = table.num_queries();
  if (spec.n_val_queries >= n)
    throw ValidationError("n_val_queries (" + std::to_string(spec.n_val_queries) +
                          ") must be below the query count (" + std::to_string(n) + ")");
  // Partial Fisher-Yates: the first n_val slots become the sample.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < spec.n_val_queries; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(perm[i], perm[j]);
  }
  std::vector<char> is_val(n, 0);
  for (std::size_t i = 0; i < spec.n_val_queries; ++i) is_val[perm[i]] = 1;
  std::vector<std::size_t> train_q, val_q;
  train_q.reserve(n - spec.n_val_queries);
  val_q.reserve(spec.n_val_queries);
  for (std::size_t q = 0; q < n; ++q) (is_val[q] ? val_q : train_q).push_back(q);
  return {table.select_queries(train_q), table.select_queries(val_q)};
}

}  // namespace ctxrank
