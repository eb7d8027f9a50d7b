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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctxrank/common.hpp"
#include "ctxrank/dataset.hpp"
#include "ctxrank/histogram.hpp"
#include "ctxrank/objective.hpp"
#include "ctxrank/pcs.hpp"

namespace ctxrank::gbdt {

enum class Objective { kClassification, kLambdarank };

std::string_view objective_name(Objective objective);
Objective parse_objective(std::string_view name);  // "classification" | "lambdarank"

struct BoostParams {
  double learning_rate = 0.05;
  int max_leaves = 31;
  int max_depth = 6;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  double colsample_bylevel = 1.0;
  double reg_alpha = 0.0;
  double reg_lambda = 1.0;
  double scale_pos_weight = 1.0;
  double min_child_weight = 1.0;
  double min_split_gain = 0.0;
  int min_child_samples = 20;
  // Unset means the caller must supply it before training.
  std::optional<int> n_estimators = 300;
  int bagging_freq = 1;
  int histogram_bins = 256;
  // Rows sampled to place bin cuts; 0 uses every row.
  int bin_sample_size = 0;
  std::uint64_t seed = 0;
};

// Throws ValidationError naming the first out-of-range field.
void validate(const BoostParams& params);

// "xgb-table3", "lgbm-table4", "lgbm-rank-table5".
BoostParams preset(std::string_view name);
Objective preset_objective(std::string_view name);
std::vector<std::string> preset_names();

// Key/value access used by config files, tuning and model files. Keys are
// the field names; feature_fraction, num_leaves and subsample_for_bin are
// accepted as aliases.
void set_param(BoostParams& params, std::string_view key, std::string_view value);
void set_param(BoostParams& params, std::string_view key, double value);
std::vector<std::pair<std::string, std::string>> param_entries(const BoostParams& params);

// Internal nodes have feature >= 0; rows go left when x <= threshold and
// follow default_left when x is missing.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  bool default_left = false;
  int left = -1;
  int right = -1;
  double weight = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // Unshrunk leaf weight reached by `row`.
  double predict(const double* row) const;
  std::size_t num_leaves() const;
  std::size_t depth() const;
};

struct BoostedModel {
  Objective objective = Objective::kClassification;
  BoostParams params;
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  std::vector<std::string> feature_names;
  // Featurization state carried with the model for inference.
  EncoderMap encoder;
  std::vector<MinMax> normalizer;
  bool include_pcs = false;

  std::size_t num_features() const { return feature_names.size(); }
};

struct TrainLogRow {
  int round = 0;
  double train_loss = 0.0;
  double valid_mrr = kMissing;
};

// Receives predict()-scale outputs for the validation matrix.
using Evaluator = std::function<double(std::span<const double>)>;

struct TrainOptions {
  const RowMatrix* valid_features = nullptr;
  Evaluator evaluate;
  // Truncate to the round with the best validation score.
  bool keep_best = true;
  std::vector<std::string> feature_names;
};

struct TrainResult {
  BoostedModel model;
  std::vector<TrainLogRow> log;
  std::size_t best_iteration = 0;
  double best_valid = kMissing;
};

// `groups` are required for lambdarank and drive query-level bagging; for
// classification they may be empty.
TrainResult train(const RowMatrix& features, std::span<const double> labels,
                  std::span<const RowGroup> groups, const BoostParams& params,
                  Objective objective, const TrainOptions& options = {});

// Classification: sigmoid of the raw score. Lambdarank: the raw score.
VectorXd predict(const BoostedModel& model, const RowMatrix& features);
// base_score + learning_rate * sum of the first `num_trees` tree outputs.
VectorXd predict_raw(const BoostedModel& model, const RowMatrix& features,
                     std::optional<std::size_t> num_trees = std::nullopt);

// Split counts as percentages, descending, ties by feature index. Features
// never split on are omitted.
std::vector<std::pair<std::string, double>> feature_importance(const BoostedModel& model);
std::string format_feature_importance(const std::vector<std::pair<std::string, double>>& imp);

std::string format_model(const BoostedModel& model);
BoostedModel parse_model(std::string_view text);
void save_model(const std::filesystem::path& path, const BoostedModel& model);
BoostedModel load_model(const std::filesystem::path& path);

std::string format_train_log(const std::vector<TrainLogRow>& log);

}  // namespace ctxrank::gbdt
