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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctxrank/dataset.hpp"
#include "ctxrank/features.hpp"
#include "ctxrank/gbdt.hpp"
#include "ctxrank/rank_eval.hpp"
#include "ctxrank/tune.hpp"

namespace ctxrank {

// Everything a run needs. Config files are flat `key = value` lines ('#'
// starts a comment); keys are listed in README.md. Boosting parameters use
// the BoostParams field names.
struct PipelineConfig {
  std::filesystem::path impressions;
  std::filesystem::path catalog;
  std::filesystem::path out_dir = "out";
  // Explicit validation table; otherwise val_queries are split off.
  std::optional<std::filesystem::path> valid_impressions;
  // 0 means 10% of the queries.
  std::size_t val_queries = 0;
  gbdt::Objective objective = gbdt::Objective::kClassification;
  std::optional<std::string> preset;
  gbdt::BoostParams params;
  bool include_pcs_feature = true;
  double threshold = kDefaultThreshold;
  std::vector<double> grid = default_grid();
  std::size_t oof_folds = 5;
  std::size_t tune_budget = 25;
  bool tune_random = false;
  bool resume = false;
  std::uint64_t seed = 7;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

ConfigEntries parse_config(std::string_view text, const std::string& source);
ConfigEntries load_config(const std::filesystem::path& path);

// Applies entries in order, except that `preset` (and `objective`) are
// resolved first so explicit parameters override the preset. A preset of
// the other objective than an explicit `objective` is a ValidationError.
void apply_config(PipelineConfig& config, const ConfigEntries& entries);

struct PreparedData {
  ImpressionTable train;
  ImpressionTable val;
  ProductCatalog catalog;
  EncoderMap encoder;
  std::vector<MinMax> normalizer;
  Day reference_date = 0;
};

// Loads, validates and splits. The reference date is the day after the
// last training observation.
PreparedData prepare_data(const PipelineConfig& config);
PreparedData prepare_data(ImpressionTable impressions, ProductCatalog catalog,
                          const PipelineConfig& config);

struct FeatureSet {
  FeatureMatrix train;  // out-of-fold
  FeatureMatrix val;    // against the whole training table
  std::vector<double> train_labels;
  std::vector<gbdt::RowGroup> train_groups;
};

VectorXd pcs_for(const ImpressionTable& rows, const ProductCatalog& catalog,
                 const std::vector<MinMax>& normalizer);

FeatureSet featurize(const PreparedData& data, const PipelineConfig& config);

// Unfiltered validation MRR of per-row outputs.
double validation_mrr(const ImpressionTable& val, std::span<const double> outputs);

gbdt::TrainResult train_model(const PreparedData& data, const FeatureSet& features,
                              const PipelineConfig& config);

// Featurizes `rows` the way the model was trained (encoder, normalizer,
// pcs flag) against `reference` and returns predict() outputs.
VectorXd score_rows(const gbdt::BoostedModel& model, const ImpressionTable& rows,
                    const ImpressionTable& reference, const ProductCatalog& catalog,
                    Day reference_date);

struct Evaluation {
  std::vector<ScoredImpression> scored;
  MrrResult unfiltered;
  MrrResult filtered;
  double threshold = kDefaultThreshold;
};

Evaluation evaluate_scored(std::vector<ScoredImpression> scored, const ClickLabels& labels,
                           double threshold);
std::string format_metrics(const Evaluation& eval);

// Applies the tuned point onto base parameters.
gbdt::BoostParams with_point(gbdt::BoostParams base, const tuning::ParamPoint& point);

}  // namespace ctxrank
