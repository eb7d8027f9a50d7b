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

#include "ctxrank/features.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "ctxrank/csv.hpp"
#include "ctxrank/parallel.hpp"

namespace ctxrank {

namespace {

using Index = Eigen::Index;

// Running mean/max/min that ignores NaN inputs.
struct Stat {
  double sum = 0.0;
  double max = -std::numeric_limits<double>::infinity();
  double min = std::numeric_limits<double>::infinity();
  std::size_t n = 0;

  void add(double v) {
    if (is_missing(v)) return;
    sum += v;
    max = std::max(max, v);
    min = std::min(min, v);
    ++n;
  }
  double mean_or_missing() const { return n ? sum / static_cast<double>(n) : kMissing; }
  double max_or_missing() const { return n ? max : kMissing; }
  double min_or_missing() const { return n ? min : kMissing; }
};

std::string pair_key(std::string_view a, std::string_view b) {
  std::string k;
  k.reserve(a.size() + b.size() + 1);
  k.append(a);
  k.push_back('\x1f');
  k.append(b);
  return k;
}

std::string pair_key(std::string_view a, long long b) { return pair_key(a, std::to_string(b)); }

long long week_of(Day d) {
  // Floor division so dates before the epoch still group by 7.
  return d >= 0 ? d / 7 : -((-static_cast<long long>(d) + 6) / 7);
}

// Resolves the attributes the feature families read from the catalog.
class Attributes {
 public:
  explicit Attributes(const ProductCatalog& catalog) : catalog_(catalog) {
    auto need_numeric = [&](const char* name) {
      if (auto i = catalog.numeric_index(name)) return *i;
      throw ValidationError(std::string("catalog lacks numeric attribute '") + name + "'");
    };
    auto need_single = [&](const char* name) {
      if (auto i = catalog.single_index(name)) return *i;
      throw ValidationError(std::string("catalog lacks categorical attribute '") + name + "'");
    };
    price_ = need_numeric("product_price");
    sod_ = need_numeric("start_online_date");
    cats_ = {need_single("brand"), need_single("category"), need_single("main_colour")};
  }

  std::optional<std::size_t> product(const ImpressionRow& r) const {
    return catalog_.find(r.product_id);
  }
  double price(const ImpressionRow& r) const { return numeric(r, price_); }
  double sod(const ImpressionRow& r) const { return numeric(r, sod_); }
  // 0 brand, 1 category, 2 main colour; empty when unknown or missing.
  std::string_view category_value(const ImpressionRow& r, std::size_t which) const {
    auto p = product(r);
    return p ? std::string_view(catalog_.single(*p, cats_[which])) : std::string_view();
  }

 private:
  double numeric(const ImpressionRow& r, std::size_t attr) const {
    auto p = product(r);
    return p ? catalog_.numeric(*p, attr) : kMissing;
  }

  const ProductCatalog& catalog_;
  std::size_t price_ = 0, sod_ = 0;
  std::array<std::size_t, 3> cats_{};
};

constexpr std::array<const char*, 3> kCategoryNames = {"brand", "category", "main_colour"};

std::vector<const ImpressionRow*> pooled_rows(const ImpressionTable& rows,
                                              const ImpressionTable& reference) {
  std::vector<const ImpressionRow*> pool;
  pool.reserve(rows.size() + reference.size());
  for (const auto& r : reference.rows()) pool.push_back(&r);
  for (const auto& g : rows.queries()) {
    if (reference.find_query(g.query_id)) continue;
    for (std::size_t i = g.begin; i < g.begin + g.size; ++i) pool.push_back(&rows.row(i));
  }
  return pool;
}

void require_labels(const FeatureContext& ctx) {
  if (!ctx.reference_table.labeled() && ctx.reference_table.size() > 0)
    throw ValidationError("feature reference table must be labeled");
}

bool clicked(const ImpressionRow& r) { return r.is_click && *r.is_click == 1; }

VectorXd make_column(std::size_t n) { return VectorXd::Constant(static_cast<Index>(n), kMissing); }

// Per-key Stat over a row set.
template <typename KeyFn, typename ValueFn>
std::unordered_map<std::string, Stat> group_stats(const std::vector<const ImpressionRow*>& rows,
                                                  KeyFn key, ValueFn value) {
  std::unordered_map<std::string, Stat> out;
  for (const auto* r : rows) out[key(*r)].add(value(*r));
  return out;
}

std::vector<const ImpressionRow*> clicked_rows(const ImpressionTable& reference) {
  std::vector<const ImpressionRow*> out;
  for (const auto& r : reference.rows())
    if (clicked(r)) out.push_back(&r);
  return out;
}

const Stat* find_stat(const std::unordered_map<std::string, Stat>& m, const std::string& k) {
  auto it = m.find(k);
  return it == m.end() ? nullptr : &it->second;
}

void add_triplet(FeatureColumns& out, const std::string& prefix,
                 const std::array<VectorXd, 3>& cols) {
  out.push_back({prefix + "_mean", cols[0]});
  out.push_back({prefix + "_max", cols[1]});
  out.push_back({prefix + "_min", cols[2]});
}

// Mean/max/min of a per-key statistic joined onto rows.
template <typename KeyFn>
std::array<VectorXd, 3> join_triplet(const ImpressionTable& rows,
                                     const std::unordered_map<std::string, Stat>& stats,
                                     KeyFn key) {
  std::array<VectorXd, 3> cols{make_column(rows.size()), make_column(rows.size()),
                               make_column(rows.size())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (const Stat* s = find_stat(stats, key(rows.row(i)))) {
      cols[0][static_cast<Index>(i)] = s->mean_or_missing();
      cols[1][static_cast<Index>(i)] = s->max_or_missing();
      cols[2][static_cast<Index>(i)] = s->min_or_missing();
    }
  }
  return cols;
}

std::string tier_key(const ImpressionRow& r) { return std::to_string(r.user_tier); }

}  // namespace

// ---------------------------------------------------------------------------

std::optional<std::size_t> FeatureMatrix::column(std::string_view name) const {
  for (std::size_t i = 0; i < column_names.size(); ++i)
    if (column_names[i] == name) return i;
  return std::nullopt;
}

VectorXd FeatureMatrix::column_values(std::string_view name) const {
  auto c = column(name);
  if (!c) throw ValidationError("no feature column '" + std::string(name) + "'");
  return values.col(static_cast<Index>(*c));
}

VectorXd session_click_proportion(const ImpressionTable& rows, const FeatureContext& ctx) {
  require_labels(ctx);
  std::unordered_map<std::string, double> session_clicks, product_clicks;
  for (const auto& r : ctx.reference_table.rows()) {
    if (!clicked(r)) continue;
    session_clicks[r.session_id] += 1.0;
    product_clicks[pair_key(r.session_id, r.product_id)] += 1.0;
  }
  VectorXd out = VectorXd::Zero(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows.row(i);
    auto s = session_clicks.find(r.session_id);
    if (s == session_clicks.end()) continue;
    auto p = product_clicks.find(pair_key(r.session_id, r.product_id));
    if (p != product_clicks.end()) out[static_cast<Index>(i)] = p->second / s->second;
  }
  return out;
}

FeatureColumns session_aggregates(const ImpressionTable& rows, const ProductCatalog& catalog,
                                  const FeatureContext& ctx) {
  const Attributes attrs(catalog);
  const auto pool = pooled_rows(rows, ctx.reference_table);
  auto session = [](const ImpressionRow& r) { return r.session_id; };
  const auto price = group_stats(pool, session, [&](auto& r) { return attrs.price(r); });
  const auto sod = group_stats(pool, session, [&](auto& r) { return attrs.sod(r); });

  std::unordered_map<std::string, double> product_freq;
  std::array<std::unordered_map<std::string, double>, 3> cat_freq;
  for (const auto* r : pool) {
    product_freq[pair_key(r->session_id, r->product_id)] += 1.0;
    for (std::size_t c : {0u, 2u}) {
      auto v = attrs.category_value(*r, c);
      if (!v.empty()) cat_freq[c][pair_key(r->session_id, v)] += 1.0;
    }
  }

  FeatureColumns out;
  add_triplet(out, "session_product_price", join_triplet(rows, price, session));
  add_triplet(out, "session_start_online_date", join_triplet(rows, sod, session));
  VectorXd freq = make_column(rows.size()), brand = make_column(rows.size()),
           colour = make_column(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows.row(i);
    const auto ii = static_cast<Index>(i);
    freq[ii] = product_freq[pair_key(r.session_id, r.product_id)];
    if (auto v = attrs.category_value(r, 0); !v.empty())
      brand[ii] = cat_freq[0][pair_key(r.session_id, v)];
    if (auto v = attrs.category_value(r, 2); !v.empty())
      colour[ii] = cat_freq[2][pair_key(r.session_id, v)];
  }
  out.push_back({"session_product_freq", std::move(freq)});
  out.push_back({"session_brand_freq", std::move(brand)});
  out.push_back({"session_main_colour_freq", std::move(colour)});
  return out;
}

FeatureColumns query_aggregates(const ImpressionTable& rows, const ProductCatalog& catalog) {
  const Attributes attrs(catalog);
  std::array<VectorXd, 3> price{make_column(rows.size()), make_column(rows.size()),
                                make_column(rows.size())};
  std::array<VectorXd, 3> sod = price;
  for (const auto& g : rows.queries()) {
    Stat p, s;
    for (std::size_t i = g.begin; i < g.begin + g.size; ++i) {
      p.add(attrs.price(rows.row(i)));
      s.add(attrs.sod(rows.row(i)));
    }
    for (std::size_t i = g.begin; i < g.begin + g.size; ++i) {
      const auto ii = static_cast<Index>(i);
      price[0][ii] = p.mean_or_missing();
      price[1][ii] = p.max_or_missing();
      price[2][ii] = p.min_or_missing();
      sod[0][ii] = s.mean_or_missing();
      sod[1][ii] = s.max_or_missing();
      sod[2][ii] = s.min_or_missing();
    }
  }
  FeatureColumns out;
  add_triplet(out, "query_product_price", price);
  add_triplet(out, "query_start_online_date", sod);
  return out;
}

FeatureColumns global_static(const ImpressionTable& rows, const ProductCatalog& catalog,
                             const FeatureContext& ctx) {
  require_labels(ctx);
  const Attributes attrs(catalog);
  const auto pool = pooled_rows(rows, ctx.reference_table);

  std::unordered_map<std::string, std::unordered_set<std::string>> users, queries;
  for (const auto* r : pool) {
    users[r->product_id].insert(r->user_id);
    queries[r->product_id].insert(r->query_id);
  }

  struct ClickInfo {
    std::unordered_set<std::string> users;
    double clicks = 0.0;
    double impressions = 0.0;
    Day last_date = std::numeric_limits<Day>::min();
  };
  std::unordered_map<std::string, ClickInfo> info;
  for (const auto& r : ctx.reference_table.rows()) {
    auto& ci = info[r.product_id];
    ci.impressions += 1.0;
    if (!clicked(r)) continue;
    ci.users.insert(r.user_id);
    ci.clicks += 1.0;
    ci.last_date = std::max(ci.last_date, r.observation_date);
  }

  const std::size_t n = rows.size();
  VectorXd user_count = make_column(n), impression_count = make_column(n),
           unique_clicked = make_column(n), last_price = make_column(n),
           last_days = make_column(n), click_rate = make_column(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows.row(i);
    const auto ii = static_cast<Index>(i);
    user_count[ii] = static_cast<double>(users[r.product_id].size());
    impression_count[ii] = static_cast<double>(queries[r.product_id].size());
    auto it = info.find(r.product_id);
    if (it == info.end()) continue;
    const ClickInfo& ci = it->second;
    click_rate[ii] = ci.clicks / ci.impressions;
    if (ci.clicks == 0.0) continue;
    unique_clicked[ii] = static_cast<double>(ci.users.size());
    last_price[ii] = attrs.price(r);
    last_days[ii] = static_cast<double>(ctx.reference_date - ci.last_date);
  }
  FeatureColumns out;
  out.push_back({"product_user_count", std::move(user_count)});
  out.push_back({"product_impression_count", std::move(impression_count)});
  out.push_back({"#unique_users_clicked", std::move(unique_clicked)});
  out.push_back({"last_clickout_product_price", std::move(last_price)});
  out.push_back({"last_clickout_days_elapsed", std::move(last_days)});
  out.push_back({"product_click_rate", std::move(click_rate)});
  return out;
}

FeatureColumns popularity_rates(const ImpressionTable& rows, const ProductCatalog& catalog,
                                const FeatureContext& ctx) {
  require_labels(ctx);
  const Attributes attrs(catalog);
  const auto pool = pooled_rows(rows, ctx.reference_table);
  std::array<std::unordered_map<std::string, double>, 3> seen, clicks;
  double total_seen = 0.0, total_clicks = 0.0;
  for (const auto* r : pool) {
    total_seen += 1.0;
    for (std::size_t c = 0; c < 3; ++c)
      if (auto v = attrs.category_value(*r, c); !v.empty()) seen[c][std::string(v)] += 1.0;
  }
  for (const auto& r : ctx.reference_table.rows()) {
    if (!clicked(r)) continue;
    total_clicks += 1.0;
    for (std::size_t c = 0; c < 3; ++c)
      if (auto v = attrs.category_value(r, c); !v.empty()) clicks[c][std::string(v)] += 1.0;
  }
  FeatureColumns out;
  for (std::size_t c = 0; c < 3; ++c) {
    VectorXd col = make_column(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto v = attrs.category_value(rows.row(i), c);
      if (v.empty() || total_seen == 0.0) continue;
      auto it = seen[c].find(std::string(v));
      col[static_cast<Index>(i)] = it == seen[c].end() ? 0.0 : it->second / total_seen;
    }
    out.push_back({std::string(kCategoryNames[c]) + "_popularity", std::move(col)});
  }
  for (std::size_t c = 0; c < 3; ++c) {
    VectorXd col = make_column(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto v = attrs.category_value(rows.row(i), c);
      if (v.empty() || total_clicks == 0.0) continue;
      auto it = clicks[c].find(std::string(v));
      col[static_cast<Index>(i)] = it == clicks[c].end() ? 0.0 : it->second / total_clicks;
    }
    out.push_back({std::string(kCategoryNames[c]) + "_click_share", std::move(col)});
  }
  return out;
}

FeatureColumns user_tier_aggregates(const ImpressionTable& rows, const ProductCatalog& catalog,
                                    const FeatureContext& ctx) {
  require_labels(ctx);
  const Attributes attrs(catalog);
  const auto pool = pooled_rows(rows, ctx.reference_table);
  const auto clicks = clicked_rows(ctx.reference_table);
  auto price = [&](const ImpressionRow& r) { return attrs.price(r); };
  auto sod = [&](const ImpressionRow& r) { return attrs.sod(r); };
  FeatureColumns out;
  add_triplet(out, "user_tier_product_price",
              join_triplet(rows, group_stats(pool, tier_key, price), tier_key));
  add_triplet(out, "user_tier_start_online_date",
              join_triplet(rows, group_stats(pool, tier_key, sod), tier_key));
  add_triplet(out, "user_tier_clicked_product_price",
              join_triplet(rows, group_stats(clicks, tier_key, price), tier_key));
  add_triplet(out, "user_tier_clicked_start_online_date",
              join_triplet(rows, group_stats(clicks, tier_key, sod), tier_key));
  return out;
}

FeatureColumns rank_within_impression(const ImpressionTable& rows,
                                      const ProductCatalog& catalog) {
  const Attributes attrs(catalog);
  VectorXd price_rank = make_column(rows.size()), sod_rank = make_column(rows.size());
  auto rank_by = [&](const QueryGroup& g, auto value, VectorXd& out) {
    std::vector<std::size_t> order(g.size);
    std::iota(order.begin(), order.end(), g.begin);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = value(rows.row(a)), vb = value(rows.row(b));
      const bool ma = is_missing(va), mb = is_missing(vb);
      if (ma != mb) return mb;
      if (!ma && va != vb) return va < vb;
      return rows.row(a).product_id < rows.row(b).product_id;
    });
    for (std::size_t k = 0; k < order.size(); ++k)
      out[static_cast<Index>(order[k])] = static_cast<double>(k + 1);
  };
  for (const auto& g : rows.queries()) {
    rank_by(g, [&](const ImpressionRow& r) { return attrs.price(r); }, price_rank);
    rank_by(g, [&](const ImpressionRow& r) { return attrs.sod(r); }, sod_rank);
  }
  FeatureColumns out;
  out.push_back({"product_price_rank", std::move(price_rank)});
  out.push_back({"start_online_date_rank", std::move(sod_rank)});
  return out;
}

FeatureColumns difference_features(const ImpressionTable& rows, const ProductCatalog& catalog,
                                   const FeatureContext& ctx) {
  require_labels(ctx);
  const Attributes attrs(catalog);
  const auto pool = pooled_rows(rows, ctx.reference_table);
  const auto clicks = clicked_rows(ctx.reference_table);
  auto price = [&](const ImpressionRow& r) { return attrs.price(r); };
  auto sod = [&](const ImpressionRow& r) { return attrs.sod(r); };
  auto session = [](const ImpressionRow& r) { return r.session_id; };
  auto query = [](const ImpressionRow& r) { return r.query_id; };
  auto everything = [](const ImpressionRow&) { return std::string(); };

  const auto session_price = group_stats(pool, session, price);
  const auto session_sod = group_stats(pool, session, sod);
  std::vector<const ImpressionRow*> own;
  for (const auto& r : rows.rows()) own.push_back(&r);
  const auto query_price = group_stats(own, query, price);
  const auto query_sod = group_stats(own, query, sod);
  const auto tier_price = group_stats(pool, tier_key, price);
  const auto tier_sod = group_stats(pool, tier_key, sod);
  const auto click_price = group_stats(clicks, everything, price);
  const auto click_sod = group_stats(clicks, everything, sod);
  const auto tier_click_price = group_stats(clicks, tier_key, price);

  auto diff = [&](const char* name, const std::unordered_map<std::string, Stat>& stats,
                  auto key, auto value) {
    VectorXd col = make_column(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows.row(i);
      if (const Stat* s = find_stat(stats, key(r)))
        col[static_cast<Index>(i)] = value(r) - s->mean_or_missing();
    }
    return FeatureColumn{name, std::move(col)};
  };

  FeatureColumns out;
  out.push_back(diff("diff_prod_price_from_session_mean", session_price, session, price));
  out.push_back(diff("diff_start_online_date_from_session_mean", session_sod, session, sod));
  out.push_back(diff("diff_prod_price_from_query_mean", query_price, query, price));
  out.push_back(diff("diff_start_online_date_from_query_mean", query_sod, query, sod));
  out.push_back(diff("diff_prod_price_from_user_tier_mean", tier_price, tier_key, price));
  out.push_back(diff("diff_start_online_date_from_user_tier_mean", tier_sod, tier_key, sod));
  out.push_back(diff("diff_prod_price_from_click_mean", click_price, everything, price));
  out.push_back(diff("diff_start_online_date_from_click_mean", click_sod, everything, sod));
  out.push_back(
      diff("diff_prod_price_from_user_tier_click_mean", tier_click_price, tier_key, price));
  return out;
}

FeatureColumns weekly_features(const ImpressionTable& rows, const ProductCatalog& catalog,
                               const FeatureContext& ctx) {
  require_labels(ctx);
  const Attributes attrs(catalog);
  std::unordered_map<long long, Stat> week_price, week_sod;
  std::unordered_map<std::string, double> week_product;
  for (const auto& r : ctx.reference_table.rows()) {
    if (!clicked(r)) continue;
    const long long w = week_of(r.observation_date);
    week_price[w].add(attrs.price(r));
    week_sod[w].add(attrs.sod(r));
    week_product[pair_key(r.product_id, w)] += 1.0;
  }
  const std::size_t n = rows.size();
  VectorXd price_mean = make_column(n), click_count = make_column(n), sod_mean = make_column(n),
           sod_max = make_column(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows.row(i);
    const auto ii = static_cast<Index>(i);
    const long long w = week_of(r.observation_date);
    auto p = week_price.find(w);
    if (p == week_price.end()) continue;
    price_mean[ii] = p->second.mean_or_missing();
    const Stat& s = week_sod.at(w);
    sod_mean[ii] = s.mean_or_missing();
    sod_max[ii] = s.max_or_missing();
    auto c = week_product.find(pair_key(r.product_id, w));
    click_count[ii] = c == week_product.end() ? 0.0 : c->second;
  }
  FeatureColumns out;
  out.push_back({"week_clicked_product_price_mean", std::move(price_mean)});
  out.push_back({"week_product_click_count", std::move(click_count)});
  out.push_back({"start_online_date_mean_clicked_out_week", std::move(sod_mean)});
  out.push_back({"start_online_date_max_clicked_out_week", std::move(sod_max)});
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

FeatureColumns raw_attributes(const ImpressionTable& rows, const ProductCatalog& catalog,
                              const EncoderMap& encoder, const FeatureContext& ctx) {
  const std::size_t n = rows.size();
  std::vector<std::optional<std::size_t>> product(n);
  for (std::size_t i = 0; i < n; ++i) product[i] = catalog.find(rows.row(i).product_id);

  FeatureColumns out;
  for (std::size_t a = 0; a < catalog.single_names().size(); ++a) {
    const auto& enc = encoder.at(catalog.single_names()[a]);
    VectorXd col = make_column(n);
    for (std::size_t i = 0; i < n; ++i)
      if (product[i]) col[static_cast<Index>(i)] = enc.transform(catalog.single(*product[i], a));
    out.push_back({catalog.single_names()[a], std::move(col)});
  }
  for (std::size_t a = 0; a < catalog.list_names().size(); ++a) {
    VectorXd col = make_column(n);
    for (std::size_t i = 0; i < n; ++i)
      if (product[i])
        col[static_cast<Index>(i)] = static_cast<double>(catalog.list(*product[i], a).size());
    out.push_back({catalog.list_names()[a] + "_count", std::move(col)});
  }
  for (std::size_t a = 0; a < catalog.numeric_names().size(); ++a) {
    VectorXd col = make_column(n);
    for (std::size_t i = 0; i < n; ++i)
      if (product[i]) col[static_cast<Index>(i)] = catalog.numeric(*product[i], a);
    out.push_back({catalog.numeric_names()[a], std::move(col)});
  }
  VectorXd tier(static_cast<Index>(n)), days(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    tier[static_cast<Index>(i)] = rows.row(i).user_tier;
    days[static_cast<Index>(i)] =
        static_cast<double>(ctx.reference_date - rows.row(i).observation_date);
  }
  out.push_back({"user_tier", std::move(tier)});
  out.push_back({"days_elapsed", std::move(days)});
  return out;
}

}  // namespace

std::vector<std::string> feature_column_names(const ProductCatalog& catalog, bool include_pcs) {
  // Schema only depends on the catalog layout; featurize an empty table.
  const ImpressionTable empty;
  const FeatureContext ctx{empty, 0};
  EncoderMap encoder = fit_label_encoder(catalog, catalog.single_names());
  VectorXd pcs(0);
  const auto m = build_feature_matrix(empty, catalog, encoder, ctx, include_pcs ? &pcs : nullptr);
  return m.column_names;
}

FeatureMatrix build_feature_matrix(const ImpressionTable& rows, const ProductCatalog& catalog,
                                   const EncoderMap& encoder, const FeatureContext& ctx,
                                   const VectorXd* pcs_column) {
  if (pcs_column && static_cast<std::size_t>(pcs_column->size()) != rows.size())
    throw ValidationError("pcs column has " + std::to_string(pcs_column->size()) +
                          " rows, table has " + std::to_string(rows.size()));
  require_labels(ctx);
  (void)Attributes(catalog);  // fail early on a catalog without the named attributes

  // Families are independent; each task owns one output slot.
  std::vector<FeatureColumns> parts(10);
  std::vector<std::function<void()>> tasks = {
      [&] { parts[0] = raw_attributes(rows, catalog, encoder, ctx); },
      [&] {
        parts[1] = session_aggregates(rows, catalog, ctx);
        parts[1].insert(parts[1].begin(), FeatureColumn{"product_session_click_proportion",
                                                        session_click_proportion(rows, ctx)});
      },
      [&] { parts[2] = query_aggregates(rows, catalog); },
      [&] { parts[3] = global_static(rows, catalog, ctx); },
      [&] { parts[4] = popularity_rates(rows, catalog, ctx); },
      [&] { parts[5] = user_tier_aggregates(rows, catalog, ctx); },
      [&] { parts[6] = rank_within_impression(rows, catalog); },
      [&] { parts[7] = difference_features(rows, catalog, ctx); },
      [&] { parts[8] = weekly_features(rows, catalog, ctx); },
      [&] {
        if (pcs_column) parts[9].push_back({"pcs", *pcs_column});
      },
  };
  parallel_invoke(tasks);

  FeatureMatrix m;
  std::vector<const VectorXd*> cols;
  for (auto& part : parts) {
    for (auto& c : part) {
      m.column_names.push_back(c.name);
      cols.push_back(&c.values);
    }
  }
  m.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  parallel_for(cols.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) m.values.col(static_cast<Index>(c)) = *cols[c];
  });
  m.query_groups = rows.queries();
  return m;
}

FeatureMatrix build_feature_matrix_out_of_fold(const ImpressionTable& rows,
                                               const ProductCatalog& catalog,
                                               const EncoderMap& encoder, Day reference_date,
                                               std::size_t folds, std::uint64_t seed,
                                               const VectorXd* pcs_column) {
  if (folds < 2) throw ValidationError("out-of-fold featurization needs at least 2 folds");
  if (!rows.labeled()) throw ValidationError("out-of-fold featurization needs labels");
  const std::size_t nq = rows.num_queries();
  std::vector<std::size_t> order(nq);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = nq; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::size_t> fold_of(nq);
  for (std::size_t k = 0; k < nq; ++k) fold_of[order[k]] = k % folds;

  FeatureMatrix out;
  out.query_groups = rows.queries();
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> in_fold, others;
    for (std::size_t q = 0; q < nq; ++q) (fold_of[q] == f ? in_fold : others).push_back(q);
    if (in_fold.empty()) continue;
    const ImpressionTable fold_rows = rows.select_queries(in_fold);
    const ImpressionTable reference = rows.select_queries(others);
    VectorXd fold_pcs;
    if (pcs_column) {
      fold_pcs.resize(static_cast<Index>(fold_rows.size()));
      Index k = 0;
      for (std::size_t q : in_fold) {
        const auto& g = rows.queries()[q];
        for (std::size_t i = g.begin; i < g.begin + g.size; ++i) fold_pcs[k++] = (*pcs_column)[static_cast<Index>(i)];
      }
    }
    const FeatureContext ctx{reference, reference_date};
    FeatureMatrix part = build_feature_matrix(fold_rows, catalog, encoder, ctx,
                                              pcs_column ? &fold_pcs : nullptr);
    if (out.column_names.empty()) {
      out.column_names = part.column_names;
      out.values.resize(static_cast<Index>(rows.size()), part.values.cols());
    }
    Index k = 0;
    for (std::size_t q : in_fold) {
      const auto& g = rows.queries()[q];
      for (std::size_t i = g.begin; i < g.begin + g.size; ++i)
        out.values.row(static_cast<Index>(i)) = part.values.row(k++);
    }
  }
  return out;
}

std::string format_feature_matrix(const FeatureMatrix& matrix) {
  std::string out;
  for (std::size_t c = 0; c < matrix.column_names.size(); ++c) {
    if (c) out += ',';
    out += matrix.column_names[c];
  }
  out += '\n';
  for (Index r = 0; r < matrix.values.rows(); ++r) {
    for (Index c = 0; c < matrix.values.cols(); ++c) {
      if (c) out += ',';
      const double v = matrix.values(r, c);
      if (!is_missing(v)) out += format_exact(v);
    }
    out += '\n';
  }
  return out;
}

void write_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& matrix) {
  csv::write_file(path, format_feature_matrix(matrix));
}

}  // namespace ctxrank
