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

#include <algorithm>
#include <set>

#include "ctxrank/pcs.hpp"
#include "ctxrank/synthgen.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace ctxrank {
namespace {

ProductCatalog hand_catalog() {
  ProductCatalog c({"brand", "category", "colour"}, {"materials"}, {"price"});
  c.add_product("a", {"x", "y", "red"}, {{"cotton", "silk"}}, {0.0});
  c.add_product("b", {"x", "y", "blue"}, {{"cotton"}}, {0.25});
  c.add_product("c", {"z", "w", "blue"}, {{}}, {1.0});
  return c;
}

TEST(Pcs, HandExample) {
  const auto catalog = hand_catalog();
  const auto norm = normalize_numerics(catalog);
  EXPECT_DOUBLE_EQ(pcs("a", "b", norm), 0.65);
  EXPECT_DOUBLE_EQ(pcs("a", "a", norm), 1.0);
  // c: one colour match with b, one-sided empty list, |0.75| price gap.
  EXPECT_DOUBLE_EQ(pcs("b", "c", norm), (1.0 + 0.0 + 0.25) / 5.0);
  EXPECT_THROW(pcs("a", "nope", norm), ValidationError);
}

TEST(Pcs, MinMaxNormalization) {
  ProductCatalog c({"brand"}, {}, {"price", "flat"});
  c.add_product("a", {"x"}, {}, {0.0, 3.0});
  c.add_product("b", {"x"}, {}, {5.0, 3.0});
  c.add_product("c", {"x"}, {}, {10.0, 3.0});
  c.add_product("d", {"x"}, {}, {kMissing, 3.0});
  const auto norm = normalize_numerics(c);
  EXPECT_DOUBLE_EQ(norm.numeric(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(norm.numeric(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(norm.numeric(2, 0), 1.0);
  EXPECT_TRUE(is_missing(norm.numeric(3, 0)));
  for (std::size_t p = 0; p < 4; ++p) EXPECT_DOUBLE_EQ(norm.numeric(p, 1), 0.5);
  // Missing numeric contributes nothing.
  EXPECT_DOUBLE_EQ(pcs("a", "d", norm), 2.0 / 3.0);
  const MinMax mm{0.0, 10.0};
  EXPECT_DOUBLE_EQ(mm.apply(-5.0), 0.0);
  EXPECT_DOUBLE_EQ(mm.apply(15.0), 1.0);
}

TEST(Pcs, PropertiesOverRandomPairs) {
  const auto data = synth::generate(synth::SynthConfig::for_queries(400));
  const auto& c = data.catalog;
  const auto norm = normalize_numerics(c);
  const double step = 1.0 / static_cast<double>(c.num_attributes());
  const auto brand = *c.single_index("brand");
  Rng rng(99);
  for (int t = 0; t < 1000; ++t) {
    const auto i = rng.below(c.size());
    const auto j = rng.below(c.size());
    const double s = pcs(i, j, norm);
    ASSERT_NEAR(s, testing::reference_pcs(c, i, j), 1e-12);
    EXPECT_DOUBLE_EQ(s, pcs(j, i, norm));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_DOUBLE_EQ(pcs(i, i, norm), 1.0);
    if (c.single(i, brand) != c.single(j, brand) && !c.single(i, brand).empty()) {
      // Give j the brand of i and compare.
      const auto probe = testing::single_match_probe(c, i, j, brand);
      const NormalizedCatalog probe_norm(probe, norm.params());
      EXPECT_NEAR(pcs("i", "j", probe_norm) - s, step, 1e-12);
    }
  }
}

TEST(Pcs, ColumnMatchesPairwise) {
  const auto data = synth::generate(synth::SynthConfig::for_queries(100));
  const auto norm = normalize_numerics(data.catalog);
  const VectorXd col = pcs_column(data.impressions, norm);
  ASSERT_EQ(static_cast<std::size_t>(col.size()), data.impressions.size());
  for (std::size_t r = 0; r < data.impressions.size(); ++r) {
    const auto& row = data.impressions.row(r);
    EXPECT_EQ(col[static_cast<Eigen::Index>(r)], pcs(row.product_id, row.context_product_id, norm));
  }
}

TEST(Pcs, UnknownProductsGiveMissing) {
  const auto catalog = testing::small_catalog(5);
  const auto norm = normalize_numerics(catalog);
  std::vector<ImpressionRow> rows;
  for (int k = 0; k < 6; ++k) rows.push_back(testing::make_row("q", "u", "s", "p0", "p" + std::to_string(k), 0));
  const VectorXd col = pcs_column(ImpressionTable::from_rows(rows), norm);
  EXPECT_DOUBLE_EQ(col[0], 1.0);
  EXPECT_TRUE(is_missing(col[5]));
}

}  // namespace
}  // namespace ctxrank
