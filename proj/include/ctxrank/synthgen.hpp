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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctxrank/dataset.hpp"

namespace ctxrank::synth {

// Weights of the latent click utility
//   u = price * (-normalized_price) + context * pcs + session * session_hot
struct SignalWeights {
  double price = 4.0;
  double context = 6.0;
  double session = 2.0;
};

// Shape of a generated dataset. The catalog always carries the attributes
// the feature pipeline names: single-valued brand, category, main_colour
// (so k_single >= 3) and numeric product_price, start_online_date
// (so k_numeric >= 2).
struct SynthConfig {
  std::size_t n_queries = 1000;
  std::size_t n_users = 170;
  std::size_t n_sessions = 340;
  std::size_t n_products = 1000;
  std::size_t k_single = 6;
  std::size_t k_numeric = 3;
  std::size_t k_list = 2;
  SignalWeights weights;
  double click_noise = 1.0;  // softmax temperature
  int weeks = 8;
  std::uint64_t seed = 7;
  // When set, the context term only enters the utility of impressions whose
  // best candidate-context similarity reaches this value.
  std::optional<double> context_threshold;
  Day start_date = 18414;  // 2020-06-01

  // Counts scaled to the query count the way the defaults are.
  static SynthConfig for_queries(std::size_t n_queries);
  // Strong context signal gated at 0.45.
  static SynthConfig context_dominant(std::size_t n_queries);
  void validate() const;  // throws ValidationError
};

struct PlantedTruth {
  // Aligned with the generated table's queries; each vector sums to 1.
  std::vector<std::array<double, kImpressionSize>> click_probabilities;
  double beta = 0.0;
  std::optional<double> context_threshold;
};

struct SynthData {
  ImpressionTable impressions;
  ProductCatalog catalog;
  PlantedTruth truth;
};

SynthData generate(const SynthConfig& config);

inline constexpr std::string_view kTruthHeader = "query_id,product_id,latent_p";
std::string format_truth(const ImpressionTable& impressions, const PlantedTruth& truth);

// Writes impressions.csv, catalog.csv and truth.csv into `dir`.
void write_dataset(const std::filesystem::path& dir, const SynthData& data);

}  // namespace ctxrank::synth
