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


// Runs every acceptance criterion and prints one PASS/FAIL line per check.
// Exits nonzero when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ctxrank/cli.hpp"
#include "ctxrank/csv.hpp"
#include "ctxrank/features.hpp"
#include "ctxrank/objective.hpp"
#include "ctxrank/parallel.hpp"
#include "ctxrank/pcs.hpp"
#include "ctxrank/pipeline.hpp"
#include "ctxrank/rank_eval.hpp"
#include "ctxrank/synthgen.hpp"
#include "ctxrank/tune.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace ctxrank {
namespace {

constexpr double kRandomBaseline = 49.0 / 120.0;  // H_6 / 6
constexpr double kNoFilter = 2.0;                 // above any pcs value

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double unfiltered(std::span<const ScoredImpression> scored, const ClickLabels& labels) {
  return mrr(rank_all(scored, kNoFilter), labels).value;
}

// Criterion 1.
Outcome mrr_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  std::vector<ScoredImpression> scored;
  ClickLabels labels;
  for (int q = 0; q < 1000; ++q) {
    ScoredImpression s;
    s.query_id = "q" + std::to_string(q);
    std::vector<std::string> clicks;
    for (int k = 0; k < 6; ++k) {
      s.product_ids.push_back("p" + std::to_string(k));
      s.scores.push_back(rng.normal());
      s.pcs.push_back(rng.uniform());
      if (rng.uniform() < 0.2) clicks.push_back(s.product_ids.back());
    }
    if (q % 7 == 0 && clicks.empty()) clicks.push_back("p" + std::to_string(rng.below(6)));
    labels[s.query_id] = clicks;
    scored.push_back(std::move(s));
  }
  const auto module = mrr(rank_all(scored, kNoFilter), labels);
  double sum = 0.0;
  std::size_t evaluated = 0;
  for (const auto& s : scored) {
    const auto& clicks = labels.at(s.query_id);
    if (clicks.empty()) continue;
    std::vector<std::size_t> order(6);
    for (std::size_t k = 0; k < 6; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.scores[a] > s.scores[b]; });
    for (std::size_t r = 0; r < 6; ++r)
      if (std::find(clicks.begin(), clicks.end(), s.product_ids[order[r]]) != clicks.end()) {
        sum += 1.0 / static_cast<double>(r + 1);
        break;
      }
    ++evaluated;
  }
  const double brute = sum / static_cast<double>(evaluated);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {module.value == brute && module.evaluated == evaluated && secs < 1.0,
          "module=" + fmt("%.17g", module.value) + " brute=" + fmt("%.17g", brute) +
              " seconds=" + fmt("%.3f", secs)};
}

// Criterion 2.
Outcome random_baseline() {
  const auto data = synth::generate(synth::SynthConfig::for_queries(10000));
  Rng rng(202);
  std::vector<double> scores(data.impressions.size());
  for (auto& s : scores) s = rng.uniform();
  const std::vector<double> pcs(scores.size(), kMissing);
  const auto scored = group_scores(data.impressions, scores, pcs);
  const double v = unfiltered(scored, click_labels(data.impressions));
  return {std::abs(v - kRandomBaseline) <= 0.01,
          "mrr=" + fmt("%.5f", v) + " target=" + fmt("%.5f", kRandomBaseline)};
}

struct Trained {
  double valid_mrr = 0.0;
  double rescored_mrr = 0.0;
  double seconds = 0.0;
};

Trained train_on(const synth::SynthData& data, PipelineConfig config) {
  const auto start = std::chrono::steady_clock::now();
  config.val_queries = 1000;
  const auto prepared = prepare_data(data.impressions, data.catalog, config);
  const auto features = featurize(prepared, config);
  const auto result = train_model(prepared, features, config);
  Trained t;
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  t.valid_mrr = result.best_valid;
  const VectorXd scores = score_rows(result.model, prepared.val, prepared.train, prepared.catalog,
                                     prepared.reference_date);
  const VectorXd pcs = pcs_for(prepared.val, prepared.catalog, prepared.normalizer);
  const auto scored = group_scores(prepared.val, as_span(scores), as_span(pcs));
  t.rescored_mrr = unfiltered(scored, click_labels(prepared.val));
  return t;
}

const synth::SynthData& criterion3_data() {
  static const auto data = synth::generate(synth::SynthConfig::for_queries(11000));
  return data;
}

// Criterion 3.
Outcome learning_signal() {
  const auto t = train_on(criterion3_data(), PipelineConfig{});
  const bool pass = t.valid_mrr >= 0.50 && t.valid_mrr >= kRandomBaseline + 0.09 &&
                    t.rescored_mrr == t.valid_mrr && t.seconds < 300.0;
  return {pass, "val_mrr=" + fmt("%.4f", t.valid_mrr) + " rescored=" + fmt("%.4f", t.rescored_mrr) +
                    " seconds=" + fmt("%.1f", t.seconds)};
}

// Criterion 4.
Outcome filter_lift() {
  const auto data = synth::generate(synth::SynthConfig::context_dominant(11000));
  PipelineConfig config;
  config.val_queries = 1000;
  config.include_pcs_feature = false;
  const auto prepared = prepare_data(data.impressions, data.catalog, config);
  const auto features = featurize(prepared, config);
  const auto result = train_model(prepared, features, config);
  const VectorXd scores = score_rows(result.model, prepared.val, prepared.train, prepared.catalog,
                                     prepared.reference_date);
  const VectorXd pcs = pcs_for(prepared.val, prepared.catalog, prepared.normalizer);
  const auto scored = group_scores(prepared.val, as_span(scores), as_span(pcs));
  const auto labels = click_labels(prepared.val);
  const double base = unfiltered(scored, labels);
  const auto grid = default_grid();
  const auto curve = threshold_sweep(scored, labels, grid);
  const double planted = data.truth.context_threshold.value();
  const bool pass = curve.best_mrr >= 1.05 * base &&
                    std::abs(curve.best_threshold - planted) <= 0.05 + 1e-9;
  return {pass, "unfiltered=" + fmt("%.4f", base) + " filtered=" + fmt("%.4f", curve.best_mrr) +
                    " lift=" + fmt("%.1f%%", 100.0 * (curve.best_mrr / base - 1.0)) +
                    " best_theta=" + fmt("%.2f", curve.best_threshold) +
                    " planted=" + fmt("%.2f", planted)};
}

// Criterion 5.
Outcome both_objectives() {
  const auto cls = train_on(criterion3_data(), PipelineConfig{});
  PipelineConfig rank;
  rank.objective = gbdt::Objective::kLambdarank;
  const auto rnk = train_on(criterion3_data(), rank);
  const bool pass = cls.valid_mrr >= kRandomBaseline + 0.05 && rnk.valid_mrr >= kRandomBaseline + 0.05;
  return {pass, "classification=" + fmt("%.4f", cls.valid_mrr) + " lambdarank=" +
                    fmt("%.4f", rnk.valid_mrr)};
}

bool close(double got, long double want) {
  const long double err = std::abs(static_cast<long double>(got) - want);
  return err <= 1e-4L * std::max(std::abs(want), 1e-8L);
}

// Frozen-weight pairwise logistic cost in extended precision.
long double pair_cost(const std::vector<long double>& s, const std::vector<double>& l,
                      const Eigen::MatrixXd& w, long double sigma) {
  long double c = 0.0L;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (l[i] > l[j])
        c += static_cast<long double>(w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) *
             std::log1p(std::exp(-sigma * (s[i] - s[j])));
  return c;
}

// Criterion 6.
Outcome gradients() {
  Rng rng(606);
  std::size_t bad = 0, checked = 0;
  const long double hg = 1e-5L, hh = 1e-4L;
  for (int t = 0; t < 100; ++t) {
    const long double s = static_cast<long double>(rng.uniform(-6.0, 6.0));
    const long double y = rng.below(2);
    const long double w = t % 2 ? 1.0L : static_cast<long double>(rng.uniform(1.0, 40.0));
    const auto gh = gbdt::logloss_grad_hess(static_cast<double>(s), static_cast<double>(y),
                                            static_cast<double>(w));
    auto f = [&](long double x) { return gbdt::logloss(x, y, w); };
    const long double fd = (f(s + hg) - f(s - hg)) / (2 * hg);
    const long double fd2 = (f(s + hh) - 2 * f(s) + f(s - hh)) / (hh * hh);
    bad += !close(gh.grad, fd) + !close(gh.hess, fd2);
    checked += 2;
  }
  for (int t = 0; t < 100; ++t) {
    const double sigma = t % 3 == 0 ? 2.0 : 1.0;
    std::vector<double> scores(6), labels(6, 0.0);
    for (auto& s : scores) s = rng.normal();
    labels[rng.below(6)] = 1.0;
    if (t % 4 == 0) labels[rng.below(6)] = 2.0;
    const auto w = gbdt::ndcg_swap_weights(scores, labels);
    std::vector<double> grad(6), hess(6);
    gbdt::pairwise_grad_hess(scores, labels, w, grad, hess, sigma);
    std::vector<double> grad2(6), hess2(6);
    const gbdt::RowGroup group{0, 6};
    if (sigma == 1.0) {
      gbdt::lambdarank_grad_hess(scores, labels, std::span(&group, 1), grad2, hess2);
      bad += grad2 != grad || hess2 != hess;
    }
    std::vector<long double> base(scores.begin(), scores.end());
    auto cost = [&](std::size_t k, long double d) {
      auto s = base;
      s[k] += d;
      return pair_cost(s, labels, w, sigma);
    };
    for (std::size_t k = 0; k < 6; ++k) {
      const long double fd = (cost(k, hg) - cost(k, -hg)) / (2 * hg);
      const long double fd2 = (cost(k, hh) - 2 * cost(k, 0) + cost(k, -hh)) / (hh * hh);
      bad += !close(grad[k], fd) + !close(hess[k], fd2);
      checked += 2;
    }
  }
  return {bad == 0, "mismatches=" + std::to_string(bad) + "/" + std::to_string(checked)};
}

// Criterion 7.
Outcome split_oracle() {
  Rng rng(707);
  std::size_t bad = 0, with_split = 0;
  std::string first;
  for (int t = 0; t < 200; ++t) {
    bool found = false;
    const auto msg = testing::compare_with_brute_force(testing::random_split_instance(rng, t), &found);
    with_split += found;
    if (!msg.empty() && bad++ == 0) first = " first: trial " + std::to_string(t) + " " + msg;
  }
  return {bad == 0, "mismatches=" + std::to_string(bad) + "/200 with_split=" +
                        std::to_string(with_split) + first};
}

// Criterion 8.
Outcome pcs_properties() {
  ProductCatalog hand({"brand", "category", "colour"}, {"materials"}, {"price"});
  hand.add_product("a", {"x", "y", "red"}, {{"cotton", "silk"}}, {0.0});
  hand.add_product("b", {"x", "y", "blue"}, {{"cotton"}}, {0.25});
  hand.add_product("c", {"z", "w", "blue"}, {{}}, {1.0});
  const double hand_value = pcs("a", "b", normalize_numerics(hand));

  const auto data = synth::generate(synth::SynthConfig::for_queries(400));
  const auto& c = data.catalog;
  const auto norm = normalize_numerics(c);
  const double step = 1.0 / static_cast<double>(c.num_attributes());
  Rng rng(808);
  std::size_t bad = 0, probes = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto i = rng.below(c.size());
    const auto j = rng.below(c.size());
    const double s = pcs(i, j, norm);
    bad += std::abs(s - testing::reference_pcs(c, i, j)) > 1e-12;
    bad += s != pcs(j, i, norm) || s < 0.0 || s > 1.0 || pcs(i, i, norm) != 1.0;
    const auto attr = rng.below(c.single_names().size());
    if (c.single(i, attr).empty() || c.single(i, attr) == c.single(j, attr)) continue;
    const auto probe = testing::single_match_probe(c, i, j, attr);
    const NormalizedCatalog probe_norm(probe, norm.params());
    bad += std::abs(pcs("i", "j", probe_norm) - s - step) > 1e-12;
    ++probes;
  }
  return {bad == 0 && hand_value == 0.65 && probes > 100,
          "violations=" + std::to_string(bad) + " probes=" + std::to_string(probes) +
              " hand=" + fmt("%.17g", hand_value)};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ctxrank");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != cli::kExitOk) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

// Criterion 9.
Outcome determinism() {
  testing::TempDir dir("acceptance_det");
  auto pipeline = [&](const std::string& out, const std::string& threads) {
    const auto d = (dir / out).string();
    std::vector<std::string> common{"--impressions", d + "/data/impressions.csv",
                                    "--catalog", d + "/data/catalog.csv", "--out", d,
                                    "--threads", threads};
    auto with = [&](std::string sub, std::vector<std::string> extra = {}) {
      std::vector<std::string> a{std::move(sub)};
      a.insert(a.end(), common.begin(), common.end());
      a.insert(a.end(), extra.begin(), extra.end());
      return cli(a);
    };
    return cli({"synth", "--queries", "1200", "--out", d + "/data", "--threads", threads}) ||
           with("train", {"--n-estimators", "40", "--seed", "5"}) || with("evaluate") ||
           with("sweep");
  };
  std::size_t diffs = 0;
  std::string failed;
  for (const char* t : {"1", "2", "8"})
    if (pipeline(std::string("t") + t, t)) failed += std::string(" run t") + t;
  if (!failed.empty()) return {false, "pipeline failed:" + failed};
  if (pipeline("again", "2")) return {false, "pipeline rerun failed"};
  for (const char* f : {"data/impressions.csv", "data/catalog.csv", "data/truth.csv", "model.txt",
                        "train_log.csv", "feature_importance.csv", "metrics.csv",
                        "predictions.csv", "sweep.csv"}) {
    const auto ref = csv::read_file(dir / "t1" / f);
    for (const char* other : {"t2", "t8", "again"}) diffs += csv::read_file(dir / other / f) != ref;
  }
  return {diffs == 0, "differing_files=" + std::to_string(diffs) + " threads=1,2,8 plus rerun"};
}

// Criterion 10.
Outcome leakage_guard() {
  const auto data = synth::generate(synth::SynthConfig::for_queries(1100));
  const auto split = split_by_query(data.impressions, {100, 10});
  const auto encoder = fit_label_encoder(data.catalog, data.catalog.single_names());
  const auto normalizer = fit_min_max(data.catalog);
  const FeatureContext ctx{split.train, 18500};
  const VectorXd pcs = pcs_for(split.val, data.catalog, normalizer);
  const auto base = format_feature_matrix(build_feature_matrix(split.val, data.catalog, encoder, ctx, &pcs));
  std::vector<ImpressionRow> rows(split.val.rows().begin(), split.val.rows().end());
  std::size_t changed = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto flipped = rows;
    flipped[r].is_click = static_cast<std::int8_t>(1 - *flipped[r].is_click);
    const auto t = ImpressionTable::from_rows(flipped);
    changed += format_feature_matrix(build_feature_matrix(t, data.catalog, encoder, ctx, &pcs)) != base;
  }
  return {changed == 0 && rows.size() == 600,
          "changed=" + std::to_string(changed) + "/" + std::to_string(rows.size()) + " rows"};
}

// Criterion 11.
Outcome tuner() {
  const tuning::SearchSpace line{{tuning::ParamDim{"x", 0.0, 1.0}}};
  auto f = [](const tuning::ParamPoint& p) { return -(p[0].second - 0.3) * (p[0].second - 0.3); };
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    hits += std::abs(tuning::tune(f, line, {25, seed}).best[0].second - 0.3) <= 0.05;
  tuning::TuneOptions random{25, 1234};
  random.suggest.random_only = true;
  const auto r = tuning::tune(f, line, random);
  bool same = r.history.trials.size() == 25;
  for (std::size_t t = 0; same && t < 25; ++t) {
    Rng rng(derive_seed(1234, t));
    same = r.history.trials[t].params == tuning::random_point(line, rng);
  }
  return {hits >= 9 && same, "hits=" + std::to_string(hits) + "/10 random_replay=" +
                                 (same ? "exact" : "differs")};
}

}  // namespace
}  // namespace ctxrank

int main() {
  using namespace ctxrank;
  set_num_threads(static_cast<int>(std::max(4u, std::thread::hardware_concurrency())));
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"C1 mrr matches brute-force scan", mrr_oracle},
      {"C2 random ranking baseline", random_baseline},
      {"C3 learning signal", learning_signal},
      {"C4 threshold filter lift", filter_lift},
      {"C5 both objectives beat random", both_objectives},
      {"C6 gradient and hessian finite differences", gradients},
      {"C7 split search matches enumeration", split_oracle},
      {"C8 pcs properties", pcs_properties},
      {"C9 determinism", determinism},
      {"C10 validation features ignore labels", leakage_guard},
      {"C11 tuner sanity", tuner},
  };
  int failures = 0;
  for (const auto& [name, check] : checks) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, checks.size());
  return failures == 0 ? 0 : 1;
}
