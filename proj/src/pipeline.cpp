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

#include "ctxrank/pipeline.hpp"

#include <algorithm>
#include <limits>

#include "ctxrank/csv.hpp"
#include "ctxrank/pcs.hpp"

namespace ctxrank {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ValidationError("config key " + std::string(key) + " expects a boolean, got '" +
                        std::string(v) + "'");
}

std::size_t parse_count(std::string_view key, std::string_view v) {
  const long long n = parse_int(v);
  if (n < 0) throw ValidationError("config key " + std::string(key) + " must be >= 0");
  return static_cast<std::size_t>(n);
}

}  // namespace

ConfigEntries parse_config(std::string_view text, const std::string& source) {
  ConfigEntries out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(source + ":" + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError(source + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

ConfigEntries load_config(const std::filesystem::path& path) {
  return parse_config(csv::read_file(path), path.string());
}

void apply_config(PipelineConfig& config, const ConfigEntries& entries) {
  std::optional<std::string> preset;
  std::optional<gbdt::Objective> objective;
  for (const auto& [k, v] : entries) {
    if (k == "preset") preset = v;
    if (k == "objective") objective = gbdt::parse_objective(v);
  }
  if (preset) {
    const auto preset_obj = gbdt::preset_objective(*preset);
    if (objective && *objective != preset_obj)
      throw ValidationError("conflicting options: preset " + *preset + " trains " +
                            std::string(gbdt::objective_name(preset_obj)) + " but objective is " +
                            std::string(gbdt::objective_name(*objective)));
    config.params = gbdt::preset(*preset);
    config.preset = preset;
    config.objective = preset_obj;
  }
  if (objective) config.objective = *objective;
  if (preset && !objective) config.objective = gbdt::preset_objective(*preset);

  for (const auto& [k, v] : entries) {
    if (k == "preset" || k == "objective") continue;
    try {
      if (k == "impressions") config.impressions = v;
      else if (k == "catalog") config.catalog = v;
      else if (k == "out") config.out_dir = v;
      else if (k == "valid_impressions") config.valid_impressions = std::filesystem::path(v);
      else if (k == "val_queries") config.val_queries = parse_count(k, v);
      else if (k == "include_pcs") config.include_pcs_feature = parse_bool(k, v);
      else if (k == "threshold") config.threshold = parse_double(v);
      else if (k == "grid") config.grid = parse_grid(v);
      else if (k == "oof_folds") config.oof_folds = parse_count(k, v);
      else if (k == "tune_budget") config.tune_budget = parse_count(k, v);
      else if (k == "tune_random") config.tune_random = parse_bool(k, v);
      else if (k == "resume") config.resume = parse_bool(k, v);
      else if (k == "seed") config.seed = static_cast<std::uint64_t>(parse_count(k, v));
      else gbdt::set_param(config.params, k, std::string_view(v));
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      throw ValidationError("config key '" + k + "': " + what);
    }
  }
}

PreparedData prepare_data(ImpressionTable impressions, ProductCatalog catalog,
                          const PipelineConfig& config) {
  if (!impressions.labeled())
    throw ValidationError("training impressions must carry is_click labels");
  PreparedData data;
  if (config.valid_impressions) {
    data.train = std::move(impressions);
    data.val = load_impressions(*config.valid_impressions);
  } else {
    const std::size_t q = impressions.num_queries();
    const std::size_t n_val =
        config.val_queries > 0 ? config.val_queries : std::max<std::size_t>(1, q / 10);
    auto split = split_by_query(impressions, SplitSpec{n_val, derive_seed(config.seed, 1)});
    data.train = std::move(split.train);
    data.val = std::move(split.val);
  }
  data.catalog = std::move(catalog);
  data.encoder = fit_label_encoder(data.catalog, data.catalog.single_names());
  data.normalizer = fit_min_max(data.catalog);
  Day last = std::numeric_limits<Day>::min();
  for (const auto& r : data.train.rows()) last = std::max(last, r.observation_date);
  data.reference_date = data.train.size() > 0 ? last + 1 : 0;
  return data;
}

PreparedData prepare_data(const PipelineConfig& config) {
  if (config.impressions.empty()) throw ValidationError("no impressions path configured");
  if (config.catalog.empty()) throw ValidationError("no catalog path configured");
  return prepare_data(load_impressions(config.impressions), load_catalog(config.catalog), config);
}

VectorXd pcs_for(const ImpressionTable& rows, const ProductCatalog& catalog,
                 const std::vector<MinMax>& normalizer) {
  const NormalizedCatalog normalized(catalog, normalizer);
  return pcs_column(rows, normalized);
}

FeatureSet featurize(const PreparedData& data, const PipelineConfig& config) {
  FeatureSet out;
  VectorXd train_pcs, val_pcs;
  const VectorXd* tp = nullptr;
  const VectorXd* vp = nullptr;
  if (config.include_pcs_feature) {
    train_pcs = pcs_for(data.train, data.catalog, data.normalizer);
    val_pcs = pcs_for(data.val, data.catalog, data.normalizer);
    tp = &train_pcs;
    vp = &val_pcs;
  }
  out.train = build_feature_matrix_out_of_fold(data.train, data.catalog, data.encoder,
                                               data.reference_date, config.oof_folds,
                                               derive_seed(config.seed, 2), tp);
  const FeatureContext ctx{data.train, data.reference_date};
  out.val = build_feature_matrix(data.val, data.catalog, data.encoder, ctx, vp);
  out.train_labels.reserve(data.train.size());
  for (const auto& r : data.train.rows()) out.train_labels.push_back(r.is_click.value_or(0));
  for (const auto& g : data.train.queries()) out.train_groups.push_back({g.begin, g.size});
  return out;
}

namespace {

double unfiltered_mrr(const ImpressionTable& val, const ClickLabels& labels,
                      std::span<const double> outputs) {
  const std::vector<double> no_pcs(outputs.size(), kMissing);
  const auto scored = group_scores(val, outputs, no_pcs);
  return mrr(rank_all(scored, std::numeric_limits<double>::infinity()), labels).value;
}

}  // namespace

double validation_mrr(const ImpressionTable& val, std::span<const double> outputs) {
  return unfiltered_mrr(val, click_labels(val), outputs);
}

gbdt::TrainResult train_model(const PreparedData& data, const FeatureSet& features,
                              const PipelineConfig& config) {
  gbdt::BoostParams params = config.params;
  params.seed = derive_seed(config.seed, 3);
  gbdt::TrainOptions options;
  options.feature_names = features.train.column_names;
  std::optional<ClickLabels> labels;
  if (data.val.labeled() && data.val.size() > 0) {
    labels = click_labels(data.val);
    options.valid_features = &features.val.values;
    options.evaluate = [&](std::span<const double> out) {
      return unfiltered_mrr(data.val, *labels, out);
    };
  }
  auto result = gbdt::train(features.train.values, features.train_labels, features.train_groups,
                            params, config.objective, options);
  result.model.encoder = data.encoder;
  result.model.normalizer = data.normalizer;
  result.model.include_pcs = config.include_pcs_feature;
  return result;
}

VectorXd score_rows(const gbdt::BoostedModel& model, const ImpressionTable& rows,
                    const ImpressionTable& reference, const ProductCatalog& catalog,
                    Day reference_date) {
  VectorXd pcs;
  if (model.include_pcs) {
    if (model.normalizer.size() != catalog.numeric_names().size())
      throw ValidationError("model normalizer does not match the catalog's numeric attributes");
    pcs = pcs_for(rows, catalog, model.normalizer);
  }
  const FeatureContext ctx{reference, reference_date};
  const FeatureMatrix m =
      build_feature_matrix(rows, catalog, model.encoder, ctx, model.include_pcs ? &pcs : nullptr);
  if (m.column_names != model.feature_names)
    throw ValidationError("feature schema does not match the model (" +
                          std::to_string(m.num_columns()) + " columns vs " +
                          std::to_string(model.num_features()) + ")");
  return gbdt::predict(model, m.values);
}

Evaluation evaluate_scored(std::vector<ScoredImpression> scored, const ClickLabels& labels,
                           double threshold) {
  Evaluation eval;
  eval.threshold = threshold;
  eval.unfiltered = mrr(rank_all(scored, std::numeric_limits<double>::infinity()), labels);
  eval.filtered = mrr(rank_all(scored, threshold), labels);
  eval.scored = std::move(scored);
  return eval;
}

std::string format_metrics(const Evaluation& eval) {
  std::string out = "metric,value\n";
  out += "mrr," + format_exact(eval.unfiltered.value) + "\n";
  out += "filtered_mrr," + format_exact(eval.filtered.value) + "\n";
  out += "threshold," + format_exact(eval.threshold) + "\n";
  out += "evaluated," + std::to_string(eval.unfiltered.evaluated) + "\n";
  out += "excluded," + std::to_string(eval.unfiltered.excluded) + "\n";
  return out;
}

gbdt::BoostParams with_point(gbdt::BoostParams base, const tuning::ParamPoint& point) {
  for (const auto& [k, v] : point) gbdt::set_param(base, k, v);
  return base;
}

}  // namespace ctxrank
