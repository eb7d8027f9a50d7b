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

#include <set>

#include "ctxrank/csv.hpp"
#include "ctxrank/dataset.hpp"
#include "ctxrank/synthgen.hpp"
#include "test_util.hpp"

namespace ctxrank {
namespace {

std::string impressions_text(std::size_t n_queries, std::size_t short_query = SIZE_MAX) {
  std::string text(kImpressionHeader);
  text += '\n';
  for (std::size_t q = 0; q < n_queries; ++q) {
    const std::size_t rows = q == short_query ? 5 : 6;
    for (std::size_t k = 0; k < rows; ++k)
      text += "q" + std::to_string(q) + ",u1,s1,p0,p" + std::to_string(k) + "," +
              (k == 0 ? "1" : "0") + ",2020-06-0" + std::to_string(1 + q % 9) + ",1\n";
  }
  return text;
}

TEST(Impressions, LoadsTenQueries) {
  const auto t = parse_impressions(impressions_text(10), "ten.csv");
  EXPECT_EQ(t.size(), 60u);
  EXPECT_EQ(t.num_queries(), 10u);
  EXPECT_TRUE(t.labeled());
  std::size_t total = 0;
  for (const auto& g : t.queries()) {
    EXPECT_EQ(g.size, kImpressionSize);
    total += g.size;
  }
  EXPECT_EQ(total, t.size());
}

TEST(Impressions, ShortQueryNamed) {
  try {
    parse_impressions(impressions_text(4, 2), "short.csv");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'q2'"), std::string::npos) << e.what();
  }
}

TEST(Impressions, InterleavedRowsAreGrouped) {
  std::vector<ImpressionRow> rows;
  for (int k = 0; k < 6; ++k) {
    rows.push_back(testing::make_row("b", "u", "s", "p0", "p" + std::to_string(k), 0));
    rows.push_back(testing::make_row("a", "u", "s", "p0", "p" + std::to_string(k), k == 3));
  }
  const auto t = ImpressionTable::from_rows(rows);
  ASSERT_EQ(t.num_queries(), 2u);
  EXPECT_EQ(t.queries()[0].query_id, "b");
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(t.row(i).query_id, "b");
  EXPECT_EQ(t.row(6 + 3).product_id, "p3");
}

TEST(Impressions, BadFieldsCarryLineNumbers) {
  auto text = impressions_text(2);
  const auto pos = text.find("2020-06-02");
  text.replace(pos, 10, "2020-02-31");
  try {
    parse_impressions(text, "bad.csv");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv line 8"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_impressions("query_id,user_id\nq,u\n", "cols.csv"), ValidationError);
  auto click = impressions_text(1);
  click.replace(click.find(",1,2020"), 2, ",7");
  EXPECT_THROW(parse_impressions(click, "click.csv"), ValidationError);
}

TEST(Impressions, UnlabeledWithoutClickColumn) {
  std::string text = "query_id,user_id,session_id,context_product_id,product_id,observation_date,user_tier\n";
  for (int k = 0; k < 6; ++k) text += "q,u,s,p0,p" + std::to_string(k) + ",2020-06-01,3\n";
  const auto t = parse_impressions(text, "u.csv");
  EXPECT_FALSE(t.labeled());
  EXPECT_FALSE(t.row(0).is_click.has_value());
  EXPECT_EQ(t.row(0).user_tier, 3);
}

TEST(Impressions, SyntheticFileRoundTripsByteIdentically) {
  const auto data = synth::generate(synth::SynthConfig::for_queries(200));
  testing::TempDir dir("roundtrip");
  write_impressions(dir / "imp.csv", data.impressions);
  write_catalog(dir / "cat.csv", data.catalog);
  const std::string imp_text = csv::read_file(dir / "imp.csv");
  const std::string cat_text = csv::read_file(dir / "cat.csv");
  EXPECT_EQ(format_impressions(load_impressions(dir / "imp.csv")), imp_text);
  EXPECT_EQ(format_catalog(load_catalog(dir / "cat.csv")), cat_text);
}

TEST(Catalog, KindPrefixesAndMissingValues) {
  const std::string text =
      "product_id,cat_brand,list_tags,num_price\n"
      "a,x,t1|t2,1.5\n"
      "b,,,\n";
  const auto c = parse_catalog(text, "c.csv");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.single_names()[0], "brand");
  EXPECT_EQ(c.list_names()[0], "tags");
  EXPECT_EQ(c.numeric_names()[0], "price");
  EXPECT_EQ(c.num_attributes(), 3u);
  EXPECT_EQ(c.list(0, 0).size(), 2u);
  EXPECT_TRUE(c.list(1, 0).empty());
  EXPECT_EQ(c.single(1, 0), "");
  EXPECT_TRUE(is_missing(c.numeric(1, 0)));
  EXPECT_THROW(parse_catalog("product_id,brand\na,x\n", "c.csv"), ValidationError);
  EXPECT_THROW(parse_catalog("product_id,cat_b\na,x\na,y\n", "c.csv"), ValidationError);
}

TEST(Catalog, UnresolvedProductsFlagged) {
  const auto catalog = testing::small_catalog(4);
  std::vector<ImpressionRow> rows;
  for (int k = 0; k < 6; ++k)
    rows.push_back(testing::make_row("q", "u", "s", "zz", "p" + std::to_string(k), 0));
  const auto t = ImpressionTable::from_rows(rows);
  const auto missing = unresolved_products(t, catalog);
  EXPECT_EQ(missing, (std::vector<std::string>{"zz", "p4", "p5"}));
}

TEST(Encoder, FirstAppearanceCodes) {
  ProductCatalog c({"colour"}, {}, {});
  for (const char* v : {"red", "blue", "red"}) c.add_product(std::string("p") + v + std::to_string(c.size()), {v}, {}, {});
  const std::vector<std::string> cols{"colour"};
  const auto enc = fit_label_encoder(c, cols);
  const auto& e = enc.at("colour");
  EXPECT_EQ(e.transform("red"), 1);
  EXPECT_EQ(e.transform("blue"), 2);
  EXPECT_EQ(e.transform("green"), 0);
  EXPECT_EQ(e.inverse(2), "blue");
  EXPECT_THROW(e.inverse(3), std::out_of_range);
  EXPECT_THROW(enc.at("size"), ValidationError);
}

TEST(Encoder, EmptyColumnAndErrors) {
  const ImpressionTable empty;
  const std::vector<std::string> cols{"user_id"};
  EXPECT_EQ(fit_label_encoder(empty, cols).at("user_id").size(), 0u);
  const std::vector<std::string> numeric{"is_click"};
  EXPECT_THROW(fit_label_encoder(empty, numeric), ValidationError);
  const std::vector<std::string> unknown{"nope"};
  EXPECT_THROW(fit_label_encoder(empty, unknown), ValidationError);
  const auto catalog = testing::small_catalog(3);
  const std::vector<std::string> price{"product_price"};
  EXPECT_THROW(fit_label_encoder(catalog, price), ValidationError);
}

TEST(Encoder, DenseInjectiveOnFittingData) {
  const auto t = parse_impressions(impressions_text(30), "t.csv");
  const std::vector<std::string> cols{"query_id", "product_id", "user_tier"};
  const auto enc = fit_label_encoder(t, cols);
  std::set<int> codes;
  for (const auto& r : t.rows()) {
    const int c = enc.at("query_id").transform(r.query_id);
    EXPECT_GE(c, 1);
    codes.insert(c);
    EXPECT_EQ(enc.at("query_id").inverse(c), r.query_id);
  }
  EXPECT_EQ(codes.size(), 30u);
  EXPECT_EQ(*codes.rbegin(), 30);
  EXPECT_EQ(enc.at("product_id").size(), 6u);
}

TEST(Split, CardinalityDisjointAndSeeded) {
  const auto t = parse_impressions(impressions_text(1000), "big.csv");
  const auto a = split_by_query(t, {100, 9});
  const auto b = split_by_query(t, {100, 9});
  const auto c = split_by_query(t, {100, 10});
  EXPECT_EQ(a.train.num_queries(), 900u);
  EXPECT_EQ(a.val.num_queries(), 100u);
  EXPECT_EQ(a.val.size(), 600u);
  std::set<std::string> train_ids;
  for (const auto& g : a.train.queries()) train_ids.insert(g.query_id);
  for (const auto& g : a.val.queries()) EXPECT_FALSE(train_ids.count(g.query_id));
  EXPECT_EQ(format_impressions(a.val), format_impressions(b.val));
  EXPECT_NE(format_impressions(a.val), format_impressions(c.val));
  EXPECT_THROW(split_by_query(t, {1000, 1}), ValidationError);
}

}  // namespace
}  // namespace ctxrank
