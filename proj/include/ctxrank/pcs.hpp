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
#include <string_view>
#include <vector>

#include "ctxrank/common.hpp"
#include "ctxrank/dataset.hpp"

namespace ctxrank {

// Min-max parameters of one numeric attribute.
struct MinMax {
  double min = 0.0;
  double max = 0.0;

  // Constant attributes map to 0.5; out-of-range values are clamped so a
  // catalog seen after fitting still lands in [0, 1]. NaN stays NaN.
  double apply(double x) const {
    if (is_missing(x)) return x;
    if (!(max > min)) return 0.5;
    const double v = (x - min) / (max - min);
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
};

// A catalog prepared for similarity scoring: categoricals interned, list
// tokens deduplicated and sorted, numerics min-max scaled into [0, 1].
class NormalizedCatalog {
 public:
  NormalizedCatalog(const ProductCatalog& catalog, std::vector<MinMax> params);
  // Keeps a reference to the catalog.
  NormalizedCatalog(ProductCatalog&&, std::vector<MinMax>) = delete;

  const ProductCatalog& catalog() const { return *catalog_; }
  const std::vector<MinMax>& params() const { return params_; }
  std::size_t num_attributes() const { return catalog_->num_attributes(); }

  // 0 marks a missing value.
  int single_code(std::size_t product, std::size_t attr) const {
    return singles_(static_cast<Eigen::Index>(product), static_cast<Eigen::Index>(attr));
  }
  const std::vector<std::int32_t>& tokens(std::size_t product, std::size_t attr) const {
    return lists_[product * num_lists_ + attr];
  }
  double numeric(std::size_t product, std::size_t attr) const {
    return numerics_(static_cast<Eigen::Index>(product), static_cast<Eigen::Index>(attr));
  }
  const Eigen::MatrixXd& numerics() const { return numerics_; }

 private:
  const ProductCatalog* catalog_;
  std::vector<MinMax> params_;
  Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> singles_;
  std::size_t num_lists_ = 0;
  std::vector<std::vector<std::int32_t>> lists_;  // product-major
  Eigen::MatrixXd numerics_;
};

// Fits min-max parameters on the catalog itself. The returned object refers
// to `catalog`, which must outlive it.
NormalizedCatalog normalize_numerics(const ProductCatalog& catalog);
NormalizedCatalog normalize_numerics(ProductCatalog&&) = delete;
std::vector<MinMax> fit_min_max(const ProductCatalog& catalog);

// Product-context similarity between catalog products i and j:
//   S = (1/N_p) [ sum_h phi(c_i^h, c_j^h)
//               + sum_h |l_i^h ∩ l_j^h| / max(|l_i^h|, |l_j^h|)
//               + sum_h (1 - |f_i^h - f_j^h|) ]
// with phi = 1 on equal non-missing categoricals, a list term of 1 when both
// lists are empty and 0 when exactly one is, and 0 for missing numerics.
double pcs(std::size_t product_i, std::size_t product_j, const NormalizedCatalog& catalog);
// Throws ValidationError for an unknown product id.
double pcs(std::string_view product_i, std::string_view product_j,
           const NormalizedCatalog& catalog);

// pcs(candidate, context) per row; NaN where either product is unknown.
VectorXd pcs_column(const ImpressionTable& rows, const NormalizedCatalog& catalog);

}  // namespace ctxrank
