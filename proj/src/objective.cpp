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

#include "ctxrank/objective.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "ctxrank/parallel.hpp"

namespace ctxrank::gbdt {

Eigen::MatrixXd ndcg_swap_weights(std::span<const double> scores,
                                  std::span<const double> labels) {
  const std::size_t n = scores.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> discount(n), gain(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    discount[order[pos]] = 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  for (std::size_t i = 0; i < n; ++i) gain[i] = std::exp2(labels[i]) - 1.0;

  std::vector<double> ideal(gain);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t pos = 0; pos < n; ++pos)
    idcg += ideal[pos] / std::log2(static_cast<double>(pos) + 2.0);
  if (idcg <= 0.0) return w;

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::abs((gain[i] - gain[j]) * (discount[i] - discount[j])) / idcg;
  return w;
}

void pairwise_grad_hess(std::span<const double> scores, std::span<const double> labels,
                        const Eigen::MatrixXd& pair_weights, std::span<double> grad,
                        std::span<double> hess, double sigma) {
  const std::size_t n = scores.size();
  std::fill(grad.begin(), grad.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
  std::fill(hess.begin(), hess.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(labels[i] > labels[j])) continue;
      const double delta =
          pair_weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double rho = 1.0 / (1.0 + std::exp(sigma * (scores[i] - scores[j])));
      const double lambda = sigma * rho * delta;
      const double h = sigma * sigma * rho * (1.0 - rho) * delta;
      grad[i] -= lambda;
      grad[j] += lambda;
      hess[i] += h;
      hess[j] += h;
    }
  }
}

void lambdarank_grad_hess(std::span<const double> scores, std::span<const double> labels,
                          std::span<const RowGroup> groups, std::span<double> grad,
                          std::span<double> hess, double sigma) {
  parallel_for(groups.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t g = b; g < e; ++g) {
      const auto [begin, size] = groups[g];
      const auto s = scores.subspan(begin, size);
      const auto l = labels.subspan(begin, size);
      pairwise_grad_hess(s, l, ndcg_swap_weights(s, l), grad.subspan(begin, size),
                         hess.subspan(begin, size), sigma);
    }
  });
}

double lambdarank_cost(std::span<const double> scores, std::span<const double> labels,
                       std::span<const RowGroup> groups) {
  if (groups.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [begin, size] : groups) {
    const auto s = scores.subspan(begin, size);
    const auto l = labels.subspan(begin, size);
    const Eigen::MatrixXd w = ndcg_swap_weights(s, l);
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t j = 0; j < size; ++j)
        if (l[i] > l[j])
          total += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                   std::log1p(std::exp(-(s[i] - s[j])));
  }
  return total / static_cast<double>(groups.size());
}

}  // namespace ctxrank::gbdt
