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

#include "ctxrank/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <thread>

#include "ctxrank/csv.hpp"
#include "ctxrank/pipeline.hpp"
#include "ctxrank/synthgen.hpp"

namespace ctxrank::cli {

namespace {

namespace fs = std::filesystem;

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Flag values collected before the config is resolved.
struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string impressions, catalog, valid, objective, preset, grid;
  std::optional<std::size_t> val_queries, folds, n_estimators;
  std::optional<double> threshold;
  std::vector<std::string> params;
  bool pcs_feature = false;
  bool no_pcs_feature = false;
};

ConfigEntries to_entries(const Overrides& o) {
  ConfigEntries e;
  auto put = [&](const std::string& k, const std::string& v) {
    if (!v.empty()) e.emplace_back(k, v);
  };
  put("impressions", o.impressions);
  put("catalog", o.catalog);
  put("valid_impressions", o.valid);
  put("objective", o.objective);
  put("preset", o.preset);
  put("grid", o.grid);
  put("out", o.out);
  if (o.seed) put("seed", std::to_string(*o.seed));
  if (o.val_queries) put("val_queries", std::to_string(*o.val_queries));
  if (o.folds) put("oof_folds", std::to_string(*o.folds));
  if (o.n_estimators) put("n_estimators", std::to_string(*o.n_estimators));
  if (o.threshold) put("threshold", format_exact(*o.threshold));
  if (o.pcs_feature) put("include_pcs", "1");
  if (o.no_pcs_feature) put("include_pcs", "0");
  for (const auto& p : o.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("--param expects key=value, got '" + p + "'");
    e.emplace_back(p.substr(0, eq), p.substr(eq + 1));
  }
  return e;
}

PipelineConfig resolve(const Overrides& o) {
  ConfigEntries entries;
  if (!o.config.empty()) entries = load_config(o.config);
  // flags replace file values of the same key
  for (auto& [k, v] : to_entries(o)) {
    std::erase_if(entries, [&](const auto& kv) { return kv.first == k; });
    entries.emplace_back(k, v);
  }
  PipelineConfig config;
  apply_config(config, entries);
  return config;
}

void add_data_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--impressions", o.impressions, "Impression log CSV");
  cmd->add_option("--catalog", o.catalog, "Product catalog CSV");
  cmd->add_option("--valid", o.valid, "Validation impressions (default: split off)");
  cmd->add_option("--val-queries", o.val_queries, "Validation queries to split off");
  cmd->add_option("--folds", o.folds, "Out-of-fold groups for training features");
  auto* on = cmd->add_flag("--pcs-feature", o.pcs_feature, "Feed pcs to the model");
  auto* off = cmd->add_flag("--no-pcs-feature", o.no_pcs_feature, "Use pcs only for re-ranking");
  on->excludes(off);
}

void add_model_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--objective", o.objective, "classify | rank");
  cmd->add_option("--preset", o.preset, "xgb-table3 | lgbm-table4 | lgbm-rank-table5");
  cmd->add_option("--n-estimators", o.n_estimators, "Boosting rounds");
  cmd->add_option("--param", o.params, "Boosting parameter key=value (repeatable)");
}

struct Paths {
  fs::path out;
  fs::path model() const { return out / "model.txt"; }
  fs::path predictions() const { return out / "predictions.csv"; }
};

// Scores the configured validation split, or `input` against the whole
// training split when given.
struct Scoring {
  ImpressionTable rows;
  VectorXd outputs;
  VectorXd pcs;
};

Scoring score_for_eval(const PipelineConfig& config, const fs::path& model_path,
                       const std::string& input) {
  const auto model = gbdt::load_model(model_path);
  PreparedData data = prepare_data(config);
  Scoring s;
  s.rows = input.empty() ? data.val : load_impressions(input);
  s.outputs = score_rows(model, s.rows, data.train, data.catalog, data.reference_date);
  s.pcs = pcs_for(s.rows, data.catalog, data.normalizer);
  return s;
}

ClickLabels labels_for(const PipelineConfig& config, const std::string& input,
                       const std::string& labels_path) {
  if (!labels_path.empty()) return click_labels(load_impressions(labels_path));
  if (!input.empty()) return click_labels(load_impressions(input));
  return click_labels(prepare_data(config).val);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware product ranking: features, boosting, pcs re-ranking, MRR", "ctxrank"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "Flat key = value config file");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--seed", o.seed, "Seed for splits, sampling and generation");
  app.add_option("--threads", o.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::NonNegativeNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::size_t n_queries = 1000;
  bool context_dominant = false;
  std::optional<double> w_price, w_context, w_session, ctx_threshold, noise;
  synth->add_option("--queries", n_queries, "Number of impressions")->check(CLI::PositiveNumber);
  synth->add_flag("--context-dominant", context_dominant, "Strong, gated context signal");
  synth->add_option("--price-weight", w_price);
  synth->add_option("--context-weight", w_context);
  synth->add_option("--session-weight", w_session);
  synth->add_option("--context-threshold", ctx_threshold);
  synth->add_option("--noise", noise, "Softmax temperature");

  auto* featurize_cmd = app.add_subcommand("featurize", "Write train/validation feature matrices");
  add_data_flags(featurize_cmd, o);

  auto* train = app.add_subcommand("train", "Train a model with best-iteration retention");
  add_data_flags(train, o);
  add_model_flags(train, o);

  std::string model_path, input, predictions_path, labels_path;
  auto* predict = app.add_subcommand("predict", "Score and rank impressions");
  add_data_flags(predict, o);
  predict->add_option("--model", model_path, "Model file (default OUT/model.txt)");
  predict->add_option("--input", input, "Impressions to score (default: validation split)");
  predict->add_option("--threshold", o.threshold, "pcs threshold");

  auto* evaluate = app.add_subcommand("evaluate", "MRR with and without the pcs filter");
  add_data_flags(evaluate, o);
  evaluate->add_option("--model", model_path);
  evaluate->add_option("--input", input);
  evaluate->add_option("--predictions", predictions_path, "Evaluate an existing predictions file");
  evaluate->add_option("--labels", labels_path, "Labeled impressions for --predictions");
  evaluate->add_option("--threshold", o.threshold, "pcs threshold (default 0.51)");

  auto* sweep = app.add_subcommand("sweep", "MRR over a grid of pcs thresholds");
  add_data_flags(sweep, o);
  sweep->add_option("--model", model_path);
  sweep->add_option("--input", input);
  sweep->add_option("--predictions", predictions_path);
  sweep->add_option("--labels", labels_path);
  sweep->add_option("--grid", o.grid, "lo:hi:step (default 0.30:0.60:0.03)");

  std::optional<std::size_t> budget;
  bool random_search = false, resume = false;
  auto* tune = app.add_subcommand("tune", "Bayesian search over boosting parameters");
  add_data_flags(tune, o);
  add_model_flags(tune, o);
  tune->add_option("--budget", budget, "Number of trials");
  tune->add_flag("--random-search", random_search, "Disable the surrogate");
  tune->add_flag("--resume", resume, "Continue from OUT/tune_history.csv");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    set_num_threads(o.threads > 0 ? o.threads
                                  : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    if (synth->parsed()) {
      synth::SynthConfig sc = context_dominant ? synth::SynthConfig::context_dominant(n_queries)
                                               : synth::SynthConfig::for_queries(n_queries);
      if (o.seed) sc.seed = *o.seed;
      if (w_price) sc.weights.price = *w_price;
      if (w_context) sc.weights.context = *w_context;
      if (w_session) sc.weights.session = *w_session;
      if (ctx_threshold) sc.context_threshold = *ctx_threshold;
      if (noise) sc.click_noise = *noise;
      const fs::path dir = o.out.empty() ? fs::path("data") : fs::path(o.out);
      const auto data = synth::generate(sc);
      synth::write_dataset(dir, data);
      out << "queries=" << data.impressions.num_queries() << " products=" << data.catalog.size()
          << " out=" << dir.string() << "\n";
      return kExitOk;
    }

    PipelineConfig config = resolve(o);
    const Paths paths{config.out_dir};
    const fs::path model_file = model_path.empty() ? paths.model() : fs::path(model_path);

    if (featurize_cmd->parsed()) {
      const auto data = prepare_data(config);
      const auto feats = featurize(data, config);
      write_feature_matrix(paths.out / "features_train.csv", feats.train);
      write_feature_matrix(paths.out / "features_val.csv", feats.val);
      out << "train_rows=" << feats.train.num_rows() << " val_rows=" << feats.val.num_rows()
          << " columns=" << feats.train.num_columns() << "\n";
      return kExitOk;
    }

    if (train->parsed()) {
      const auto data = prepare_data(config);
      const auto features = featurize(data, config);
      const auto result = train_model(data, features, config);
      gbdt::save_model(model_file, result.model);
      csv::write_file(paths.out / "train_log.csv", gbdt::format_train_log(result.log));
      csv::write_file(paths.out / "feature_importance.csv",
                      gbdt::format_feature_importance(gbdt::feature_importance(result.model)));
      out << "mrr=" << (is_missing(result.best_valid) ? std::string("nan") : fixed4(result.best_valid))
          << " trees=" << result.model.trees.size() << " objective="
          << gbdt::objective_name(config.objective) << "\n";
      return kExitOk;
    }

    if (predict->parsed()) {
      const auto s = score_for_eval(config, model_file, input);
      const auto ranked = rank_all(group_scores(s.rows, as_span(s.outputs), as_span(s.pcs)), config.threshold);
      write_predictions(paths.predictions(), ranked);
      std::size_t filtered = 0;
      for (const auto& r : ranked) filtered += r.filter_applied ? 1 : 0;
      out << "queries=" << ranked.size() << " filtered=" << filtered << "\n";
      return kExitOk;
    }

    if (evaluate->parsed() || sweep->parsed()) {
      std::vector<ScoredImpression> scored;
      ClickLabels labels;
      if (!predictions_path.empty()) {
        scored = load_predictions(predictions_path);
        labels = labels_for(config, input, labels_path);
      } else {
        const auto s = score_for_eval(config, model_file, input);
        scored = group_scores(s.rows, as_span(s.outputs), as_span(s.pcs));
        labels = click_labels(s.rows);
        if (evaluate->parsed())
          write_predictions(paths.predictions(), rank_all(scored, config.threshold));
      }
      if (evaluate->parsed()) {
        const auto eval = evaluate_scored(std::move(scored), labels, config.threshold);
        csv::write_file(paths.out / "metrics.csv", format_metrics(eval));
        out << "mrr=" << fixed4(eval.unfiltered.value) << " filtered=" << fixed4(eval.filtered.value)
            << "\n";
      } else {
        const auto curve = threshold_sweep(scored, labels, config.grid);
        csv::write_file(paths.out / "sweep.csv", format_sweep(curve));
        const auto unfiltered =
            mrr(rank_all(scored, std::numeric_limits<double>::infinity()), labels).value;
        out << "mrr=" << fixed4(unfiltered) << " best_threshold=" << format_exact(curve.best_threshold)
            << " best_mrr=" << fixed4(curve.best_mrr) << "\n";
      }
      return kExitOk;
    }

    if (tune->parsed()) {
      if (budget) config.tune_budget = *budget;
      if (random_search) config.tune_random = true;
      if (resume) config.resume = true;
      const auto data = prepare_data(config);
      const auto features = featurize(data, config);
      const auto space = tuning::default_space();
      tuning::TuneOptions opts;
      opts.budget = config.tune_budget;
      opts.seed = derive_seed(config.seed, 4);
      opts.suggest.random_only = config.tune_random;
      opts.history_path = paths.out / "tune_history.csv";
      opts.resume = config.resume;
      const auto eval_fn = [&](const tuning::ParamPoint& point) {
        PipelineConfig trial = config;
        trial.params = with_point(config.params, point);
        return train_model(data, features, trial).best_valid;
      };
      const auto result = tuning::tune(eval_fn, space, opts);
      std::string best = "# best of " + std::to_string(result.history.trials.size()) + " trials\n";
      for (const auto& [k, v] : result.best) best += k + " = " + format_exact(v) + "\n";
      csv::write_file(paths.out / "tune_best.cfg", best);
      out << "best_mrr=" << fixed4(result.best_mrr) << " trials=" << result.history.trials.size()
          << "\n";
      return kExitOk;
    }
    err << "error: no command\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace ctxrank::cli
