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

#include "ctxrank/pcs.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>

#include "ctxrank/parallel.hpp"

namespace ctxrank {

NormalizedCatalog::NormalizedCatalog(const ProductCatalog& catalog,
                                     std::vector<MinMax> params)
    : catalog_(&catalog), params_(std::move(params)) {
  const auto n = static_cast<Eigen::Index>(catalog.size());
  const std::size_t k1 = catalog.single_names().size();
  const std::size_t k2 = catalog.numeric_names().size();
  num_lists_ = catalog.list_names().size();
  if (params_.size() != k2)
    throw ValidationError("normalizer has " + std::to_string(params_.size()) +
                          " numeric attributes, catalog has " + std::to_string(k2));

  singles_.resize(n, static_cast<Eigen::Index>(k1));
  for (std::size_t a = 0; a < k1; ++a) {
    LabelEncoder enc;
    const auto& col = catalog.single_column(a);
    for (Eigen::Index p = 0; p < n; ++p)
      singles_(p, static_cast<Eigen::Index>(a)) = enc.fit_value(col[static_cast<std::size_t>(p)]);
  }

  lists_.resize(catalog.size() * num_lists_);
  for (std::size_t a = 0; a < num_lists_; ++a) {
    LabelEncoder enc;
    const auto& col = catalog.list_column(a);
    for (std::size_t p = 0; p < catalog.size(); ++p) {
      auto& toks = lists_[p * num_lists_ + a];
      for (const auto& t : col[p]) toks.push_back(enc.fit_value(t));
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    }
  }

  numerics_.resize(n, static_cast<Eigen::Index>(k2));
  for (std::size_t a = 0; a < k2; ++a) {
    const auto& col = catalog.numeric_column(a);
    for (Eigen::Index p = 0; p < n; ++p)
      numerics_(p, static_cast<Eigen::Index>(a)) = params_[a].apply(col[static_cast<std::size_t>(p)]);
  }
}

std::vector<MinMax> fit_min_max(const ProductCatalog& catalog) {
  std::vector<MinMax> out;
  for (std::size_t a = 0; a < catalog.numeric_names().size(); ++a) {
    MinMax mm{kMissing, kMissing};
    for (double v : catalog.numeric_column(a)) {
      if (is_missing(v)) continue;
      if (is_missing(mm.min) || v < mm.min) mm.min = v;
      if (is_missing(mm.max) || v > mm.max) mm.max = v;
    }
    if (is_missing(mm.min)) mm = {0.0, 0.0};
    out.push_back(mm);
  }
  return out;
}

NormalizedCatalog normalize_numerics(const ProductCatalog& catalog) {
  return NormalizedCatalog(catalog, fit_min_max(catalog));
}

namespace {

std::size_t intersection_size(const std::vector<std::int32_t>& a,
                              const std::vector<std::int32_t>& b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

}  // namespace

double pcs(std::size_t i, std::size_t j, const NormalizedCatalog& catalog) {
  const auto& cat = catalog.catalog();
  const std::size_t n_attr = cat.num_attributes();
  if (n_attr == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t a = 0; a < cat.single_names().size(); ++a) {
    const int ci = catalog.single_code(i, a);
    if (ci != 0 && ci == catalog.single_code(j, a)) sum += 1.0;
  }
  for (std::size_t a = 0; a < cat.list_names().size(); ++a) {
    const auto& li = catalog.tokens(i, a);
    const auto& lj = catalog.tokens(j, a);
    if (li.empty() && lj.empty()) {
      sum += 1.0;
    } else if (!li.empty() && !lj.empty()) {
      sum += static_cast<double>(intersection_size(li, lj)) /
             static_cast<double>(std::max(li.size(), lj.size()));
    }
  }
  for (std::size_t a = 0; a < cat.numeric_names().size(); ++a) {
    const double d = std::abs(catalog.numeric(i, a) - catalog.numeric(j, a));
    if (!is_missing(d)) sum += 1.0 - d;
  }
  return sum / static_cast<double>(n_attr);
}

double pcs(std::string_view product_i, std::string_view product_j,
           const NormalizedCatalog& catalog) {
  const auto i = catalog.catalog().find(product_i);
  const auto j = catalog.catalog().find(product_j);
  if (!i) throw ValidationError("unknown product '" + std::string(product_i) + "'");
  if (!j) throw ValidationError("unknown product '" + std::string(product_j) + "'");
  return pcs(*i, *j, catalog);
}

VectorXd pcs_column(const ImpressionTable& rows, const NormalizedCatalog& catalog) {
  VectorXd out(static_cast<Eigen::Index>(rows.size()));
  std::atomic<std::size_t> unresolved{0};
  parallel_for(rows.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const auto& row = rows.row(r);
      const auto i = catalog.catalog().find(row.product_id);
      const auto j = catalog.catalog().find(row.context_product_id);
      if (i && j) {
        out[static_cast<Eigen::Index>(r)] = pcs(*i, *j, catalog);
      } else {
        out[static_cast<Eigen::Index>(r)] = kMissing;
        unresolved.fetch_add(1, std::memory_order_relaxed);
      }
    }
  });
  if (unresolved > 0)
    std::clog << "warning: " << unresolved
              << " rows reference products missing from the catalog; pcs set to missing\n";
  return out;
}

}  // namespace ctxrank
