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

#include "ctxrank/gbdt.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "ctxrank/csv.hpp"
#include "ctxrank/parallel.hpp"

namespace ctxrank::gbdt {

namespace {

constexpr std::string_view kModelMagic = "ctxrank-gbdt-model 1";

}  // namespace

std::string_view objective_name(Objective objective) {
  return objective == Objective::kClassification ? "classification" : "lambdarank";
}

Objective parse_objective(std::string_view name) {
  if (name == "classification" || name == "classify") return Objective::kClassification;
  if (name == "lambdarank" || name == "rank") return Objective::kLambdarank;
  throw ValidationError("unknown objective '" + std::string(name) + "'");
}

void validate(const BoostParams& p) {
  auto fail = [](const std::string& what) { throw ValidationError("invalid BoostParams: " + what); };
  if (!(p.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (p.max_leaves < 2) fail("max_leaves must be >= 2");
  if (p.max_depth < 1) fail("max_depth must be >= 1");
  if (!(p.subsample > 0.0 && p.subsample <= 1.0)) fail("subsample must be in (0, 1]");
  if (!(p.colsample_bytree > 0.0 && p.colsample_bytree <= 1.0))
    fail("colsample_bytree must be in (0, 1]");
  if (!(p.colsample_bylevel > 0.0 && p.colsample_bylevel <= 1.0))
    fail("colsample_bylevel must be in (0, 1]");
  if (!(p.reg_alpha >= 0.0)) fail("reg_alpha must be >= 0");
  if (!(p.reg_lambda >= 0.0)) fail("reg_lambda must be >= 0");
  if (!(p.scale_pos_weight > 0.0)) fail("scale_pos_weight must be > 0");
  if (!(p.min_child_weight >= 0.0)) fail("min_child_weight must be >= 0");
  if (!(p.min_split_gain >= 0.0)) fail("min_split_gain must be >= 0");
  if (p.min_child_samples < 1) fail("min_child_samples must be >= 1");
  if (p.n_estimators && *p.n_estimators < 0) fail("n_estimators must be >= 0");
  if (p.bagging_freq < 0) fail("bagging_freq must be >= 0");
  if (p.histogram_bins < 2 || p.histogram_bins > 65535)
    fail("histogram_bins must be in [2, 65535]");
  if (p.bin_sample_size < 0) fail("bin_sample_size must be >= 0");
}

BoostParams preset(std::string_view name) {
  BoostParams p;
  if (name == "xgb-table3") {
    p.learning_rate = 0.001;
    p.max_leaves = 10;
    p.max_depth = 6;
    p.subsample = 0.71;
    p.colsample_bytree = 0.84;
    p.colsample_bylevel = 0.37;
    p.reg_alpha = 7.82;
    p.reg_lambda = 5.72;
    p.scale_pos_weight = 35.0;
    p.min_child_weight = 6.0;
    p.min_child_samples = 1;
    p.n_estimators = std::nullopt;
  } else if (name == "lgbm-table4") {
    p.learning_rate = 0.2986;
    p.max_leaves = 8;
    p.max_depth = 6;
    p.subsample = 0.90;
    p.bagging_freq = 16;
    p.colsample_bytree = 0.97;
    p.reg_alpha = 6.23;
    p.reg_lambda = 4.75;
    p.min_split_gain = 0.0338;
    p.min_child_weight = 0.0675;
    p.min_child_samples = 21;
    p.n_estimators = 8000;
    p.bin_sample_size = 135880;
  } else if (name == "lgbm-rank-table5") {
    p.learning_rate = 0.01;
    p.max_leaves = 15;
    p.max_depth = 8;
    p.subsample = 0.86;
    p.bagging_freq = 14;
    p.colsample_bytree = 0.97;
    p.reg_alpha = 6.97;
    p.reg_lambda = 7.71;
    p.min_split_gain = 0.0033;
    p.min_child_weight = 0.0469;
    p.min_child_samples = 42;
    p.n_estimators = 5000;
    p.bin_sample_size = 200000;
  } else {
    throw ValidationError("unknown preset '" + std::string(name) + "'");
  }
  return p;
}

Objective preset_objective(std::string_view name) {
  if (name == "lgbm-rank-table5") return Objective::kLambdarank;
  (void)preset(name);
  return Objective::kClassification;
}

std::vector<std::string> preset_names() {
  return {"xgb-table3", "lgbm-table4", "lgbm-rank-table5"};
}

namespace {

int to_int(std::string_view key, double v) {
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 2e9)
    throw ValidationError("parameter " + std::string(key) + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace

void set_param(BoostParams& p, std::string_view key, double v) {
  if (key == "learning_rate") p.learning_rate = v;
  else if (key == "max_leaves" || key == "num_leaves") p.max_leaves = to_int(key, v);
  else if (key == "max_depth") p.max_depth = to_int(key, v);
  else if (key == "subsample") p.subsample = v;
  else if (key == "colsample_bytree" || key == "feature_fraction") p.colsample_bytree = v;
  else if (key == "colsample_bylevel") p.colsample_bylevel = v;
  else if (key == "reg_alpha") p.reg_alpha = v;
  else if (key == "reg_lambda") p.reg_lambda = v;
  else if (key == "scale_pos_weight") p.scale_pos_weight = v;
  else if (key == "min_child_weight") p.min_child_weight = v;
  else if (key == "min_split_gain") p.min_split_gain = v;
  else if (key == "min_child_samples") p.min_child_samples = to_int(key, v);
  else if (key == "n_estimators") p.n_estimators = to_int(key, v);
  else if (key == "bagging_freq") p.bagging_freq = to_int(key, v);
  else if (key == "histogram_bins") p.histogram_bins = to_int(key, v);
  else if (key == "bin_sample_size" || key == "subsample_for_bin")
    p.bin_sample_size = to_int(key, v);
  else if (key == "seed") {
    if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError("seed must be a non-negative integer");
    p.seed = static_cast<std::uint64_t>(v);
  } else {
    throw ValidationError("unknown parameter '" + std::string(key) + "'");
  }
}

void set_param(BoostParams& p, std::string_view key, std::string_view value) {
  if (key == "n_estimators" && value == "none") {
    p.n_estimators = std::nullopt;
    return;
  }
  if (key == "seed") {
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty())
      throw ValidationError("seed must be a non-negative integer, got '" + std::string(value) + "'");
    p.seed = seed;
    return;
  }
  set_param(p, key, parse_double(value));
}

std::vector<std::pair<std::string, std::string>> param_entries(const BoostParams& p) {
  return {
      {"learning_rate", format_exact(p.learning_rate)},
      {"max_leaves", std::to_string(p.max_leaves)},
      {"max_depth", std::to_string(p.max_depth)},
      {"subsample", format_exact(p.subsample)},
      {"colsample_bytree", format_exact(p.colsample_bytree)},
      {"colsample_bylevel", format_exact(p.colsample_bylevel)},
      {"reg_alpha", format_exact(p.reg_alpha)},
      {"reg_lambda", format_exact(p.reg_lambda)},
      {"scale_pos_weight", format_exact(p.scale_pos_weight)},
      {"min_child_weight", format_exact(p.min_child_weight)},
      {"min_split_gain", format_exact(p.min_split_gain)},
      {"min_child_samples", std::to_string(p.min_child_samples)},
      {"n_estimators", p.n_estimators ? std::to_string(*p.n_estimators) : "none"},
      {"bagging_freq", std::to_string(p.bagging_freq)},
      {"histogram_bins", std::to_string(p.histogram_bins)},
      {"bin_sample_size", std::to_string(p.bin_sample_size)},
      {"seed", std::to_string(p.seed)},
  };
}

double RegressionTree::predict(const double* row) const {
  if (nodes.empty()) return 0.0;
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    const double x = row[n.feature];
    const bool left = is_missing(x) ? n.default_left : x <= n.threshold;
    i = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return nodes[i].weight;
}

std::size_t RegressionTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t out = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out = std::max(out, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return out;
}

namespace {

// k of n indices, sorted, via a partial shuffle.
std::vector<std::size_t> sample_indices(std::span<const std::size_t> from, double fraction,
                                        Rng& rng) {
  std::vector<std::size_t> pool(from.begin(), from.end());
  if (fraction >= 1.0) return pool;
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size()))));
  for (std::size_t i = 0; i < k && i < pool.size(); ++i)
    std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(std::min(k, pool.size()));
  std::sort(pool.begin(), pool.end());
  return pool;
}

struct GrowLeaf {
  int node = 0;
  std::vector<std::uint32_t> rows;
  Histogram hist;
  double grad = 0.0;
  double hess = 0.0;
  std::size_t depth = 0;
  std::optional<SplitDecision> split;
};

RegressionTree grow_tree(const BinnedMatrix& binned, std::span<const double> grad,
                         std::span<const double> hess, std::vector<std::uint32_t> rows,
                         const std::vector<std::size_t>& tree_features,
                         const std::vector<std::vector<std::size_t>>& level_features,
                         const BoostParams& p) {
  const SplitParams sp{p.reg_lambda, p.reg_alpha, p.min_child_weight, p.min_split_gain,
                       static_cast<std::size_t>(p.min_child_samples)};
  const auto max_depth = static_cast<std::size_t>(p.max_depth);
  RegressionTree tree;
  tree.nodes.emplace_back();

  auto find_split = [&](GrowLeaf& leaf) {
    leaf.split.reset();
    if (leaf.depth < max_depth && leaf.rows.size() >= 2)
      leaf.split = best_split(leaf.hist, binned.mappers, level_features[leaf.depth], sp);
  };

  std::vector<GrowLeaf> leaves;
  {
    GrowLeaf root;
    root.rows = std::move(rows);
    for (std::uint32_t r : root.rows) {
      root.grad += grad[r];
      root.hess += hess[r];
    }
    root.hist = build_histograms(binned, grad, hess, root.rows, tree_features);
    find_split(root);
    leaves.push_back(std::move(root));
  }

  while (leaves.size() < static_cast<std::size_t>(p.max_leaves)) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].split) continue;
      if (pick == leaves.size() || leaves[i].split->gain > leaves[pick].split->gain ||
          (leaves[i].split->gain == leaves[pick].split->gain &&
           leaves[i].node < leaves[pick].node))
        pick = i;
    }
    if (pick == leaves.size()) break;

    GrowLeaf parent = std::move(leaves[pick]);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
    const SplitDecision& s = *parent.split;

    GrowLeaf left, right;
    const auto& column = binned.bins[s.feature];
    for (std::uint32_t r : parent.rows) {
      const std::uint16_t b = column[r];
      const bool go_left = b == 0 ? s.default_left : b <= s.bin;
      (go_left ? left : right).rows.push_back(r);
    }
    parent.rows.clear();
    parent.rows.shrink_to_fit();

    GrowLeaf& small = left.rows.size() <= right.rows.size() ? left : right;
    GrowLeaf& large = &small == &left ? right : left;
    small.hist = build_histograms(binned, grad, hess, small.rows, tree_features);
    large.hist = subtract_histograms(parent.hist, small.hist);
    parent.hist.clear();

    left.grad = s.left.grad;
    left.hess = s.left.hess;
    right.grad = s.right.grad;
    right.hess = s.right.hess;
    left.depth = right.depth = parent.depth + 1;

    const auto parent_node = static_cast<std::size_t>(parent.node);
    left.node = static_cast<int>(tree.nodes.size());
    right.node = left.node + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& n = tree.nodes[parent_node];
    n.feature = static_cast<int>(s.feature);
    n.threshold = s.threshold;
    n.default_left = s.default_left;
    n.left = left.node;
    n.right = right.node;

    find_split(left);
    find_split(right);
    leaves.push_back(std::move(left));
    leaves.push_back(std::move(right));
  }

  for (const GrowLeaf& leaf : leaves)
    tree.nodes[static_cast<std::size_t>(leaf.node)].weight =
        leaf_weight(leaf.grad, leaf.hess, p.reg_lambda, p.reg_alpha);
  return tree;
}

void check_groups(std::span<const RowGroup> groups, std::size_t rows) {
  std::size_t next = 0;
  for (const auto& g : groups) {
    if (g.begin != next || g.size == 0)
      throw ValidationError("groups must tile the rows contiguously");
    next = g.begin + g.size;
  }
  if (next != rows) throw ValidationError("groups do not cover every row");
}

}  // namespace

TrainResult train(const RowMatrix& features, std::span<const double> labels,
                  std::span<const RowGroup> groups, const BoostParams& params,
                  Objective objective, const TrainOptions& options) {
  validate(params);
  if (!params.n_estimators) throw ValidationError("n_estimators is required for this preset");
  const auto n = static_cast<std::size_t>(features.rows());
  const auto n_features = static_cast<std::size_t>(features.cols());
  if (labels.size() != n)
    throw ValidationError("label count " + std::to_string(labels.size()) +
                          " does not match row count " + std::to_string(n));
  if (n > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("too many rows");
  if (n_features == 0) throw ValidationError("feature matrix has no columns");
  for (double y : labels) {
    if (objective == Objective::kClassification && y != 0.0 && y != 1.0)
      throw ValidationError("classification labels must be 0 or 1");
    if (!(y >= 0.0)) throw ValidationError("labels must be non-negative");
  }
  if (objective == Objective::kLambdarank && groups.empty())
    throw ValidationError("lambdarank requires query groups");
  if (!groups.empty()) check_groups(groups, n);
  if (!options.feature_names.empty() && options.feature_names.size() != n_features)
    throw ValidationError("feature name count does not match matrix columns");
  if (options.valid_features && options.valid_features->cols() != features.cols())
    throw ValidationError("validation matrix has a different column count");

  TrainResult result;
  BoostedModel& model = result.model;
  model.objective = objective;
  model.params = params;
  model.feature_names = options.feature_names;
  if (model.feature_names.empty())
    for (std::size_t f = 0; f < n_features; ++f) model.feature_names.push_back("f" + std::to_string(f));

  if (objective == Objective::kClassification && n > 0) {
    double pos = 0.0, neg = 0.0;
    for (double y : labels) (y > 0.5 ? pos : neg) += y > 0.5 ? params.scale_pos_weight : 1.0;
    const double rate = std::clamp(pos / (pos + neg), 1e-12, 1.0 - 1e-12);
    model.base_score = std::log(rate / (1.0 - rate));
  }

  const BinnedMatrix binned =
      bin_matrix(features, static_cast<std::size_t>(params.histogram_bins),
                 static_cast<std::size_t>(params.bin_sample_size), derive_seed(params.seed, 0xB1));

  std::vector<double> scores(n, model.base_score), grad(n), hess(n);
  std::vector<double> valid_scores;
  std::vector<double> valid_out;
  if (options.valid_features)
    valid_scores.assign(static_cast<std::size_t>(options.valid_features->rows()), model.base_score);

  std::vector<std::size_t> all_features(n_features);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  std::vector<std::uint32_t> sample(n);
  std::iota(sample.begin(), sample.end(), std::uint32_t{0});

  const std::uint64_t bag_seed = derive_seed(params.seed, 0xBA66);
  const std::uint64_t col_seed = derive_seed(params.seed, 0xC015);
  const int rounds = *params.n_estimators;
  const double lr = params.learning_rate;
  const double spw = params.scale_pos_weight;

  auto train_loss = [&]() {
    if (objective == Objective::kLambdarank) return lambdarank_cost(scores, labels, groups);
    double total = 0.0, weight = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += logloss(scores[i], labels[i], spw);
      weight += labels[i] > 0.5 ? spw : 1.0;
    }
    return weight > 0.0 ? total / weight : 0.0;
  };

  for (int round = 0; round < rounds; ++round) {
    if (objective == Objective::kClassification) {
      parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          const auto gh = logloss_grad_hess(scores[i], labels[i], spw);
          grad[i] = gh.grad;
          hess[i] = gh.hess;
        }
      });
    } else {
      lambdarank_grad_hess(scores, labels, groups, grad, hess);
    }

    if (params.subsample < 1.0 && (params.bagging_freq <= 1 || round % params.bagging_freq == 0)) {
      Rng rng(derive_seed(bag_seed, static_cast<std::uint64_t>(round)));
      sample.clear();
      if (objective == Objective::kLambdarank) {
        for (const auto& g : groups)
          if (rng.bernoulli(params.subsample))
            for (std::size_t r = g.begin; r < g.begin + g.size; ++r)
              sample.push_back(static_cast<std::uint32_t>(r));
      } else {
        for (std::size_t r = 0; r < n; ++r)
          if (rng.bernoulli(params.subsample)) sample.push_back(static_cast<std::uint32_t>(r));
      }
    }

    Rng col_rng(derive_seed(col_seed, static_cast<std::uint64_t>(round)));
    const auto tree_features = sample_indices(all_features, params.colsample_bytree, col_rng);
    std::vector<std::vector<std::size_t>> level_features;
    for (int d = 0; d < params.max_depth; ++d)
      level_features.push_back(sample_indices(tree_features, params.colsample_bylevel, col_rng));

    RegressionTree tree =
        grow_tree(binned, grad, hess, sample, tree_features, level_features, params);

    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        scores[i] += lr * tree.predict(features.row(static_cast<Eigen::Index>(i)).data());
    });

    TrainLogRow row;
    row.round = round + 1;
    row.train_loss = train_loss();
    if (options.valid_features) {
      const RowMatrix& vx = *options.valid_features;
      valid_out.resize(valid_scores.size());
      parallel_for(valid_scores.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          valid_scores[i] += lr * tree.predict(vx.row(static_cast<Eigen::Index>(i)).data());
          valid_out[i] = objective == Objective::kClassification ? sigmoid(valid_scores[i])
                                                                  : valid_scores[i];
        }
      });
      if (options.evaluate) {
        row.valid_mrr = options.evaluate(valid_out);
        if (is_missing(result.best_valid) || row.valid_mrr > result.best_valid) {
          result.best_valid = row.valid_mrr;
          result.best_iteration = static_cast<std::size_t>(round + 1);
        }
      }
    }
    model.trees.push_back(std::move(tree));
    result.log.push_back(row);
  }

  if (!options.evaluate || !options.valid_features || is_missing(result.best_valid)) {
    result.best_iteration = model.trees.size();
  } else if (options.keep_best) {
    model.trees.resize(result.best_iteration);
  }
  return result;
}

VectorXd predict_raw(const BoostedModel& model, const RowMatrix& features,
                     std::optional<std::size_t> num_trees) {
  if (static_cast<std::size_t>(features.cols()) != model.num_features())
    throw ValidationError("feature matrix has " + std::to_string(features.cols()) +
                          " columns, model expects " + std::to_string(model.num_features()));
  const std::size_t k = std::min(num_trees.value_or(model.trees.size()), model.trees.size());
  const double lr = model.params.learning_rate;
  VectorXd out(features.rows());
  parallel_for(static_cast<std::size_t>(features.rows()), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double* row = features.row(static_cast<Eigen::Index>(i)).data();
      double s = model.base_score;
      for (std::size_t t = 0; t < k; ++t) s += lr * model.trees[t].predict(row);
      out[static_cast<Eigen::Index>(i)] = s;
    }
  });
  return out;
}

VectorXd predict(const BoostedModel& model, const RowMatrix& features) {
  VectorXd raw = predict_raw(model, features);
  if (model.objective == Objective::kClassification)
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = sigmoid(raw[i]);
  return raw;
}

std::vector<std::pair<std::string, double>> feature_importance(const BoostedModel& model) {
  std::vector<std::size_t> counts(model.num_features(), 0);
  std::size_t total = 0;
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf() && static_cast<std::size_t>(node.feature) < counts.size()) {
        ++counts[static_cast<std::size_t>(node.feature)];
        ++total;
      }
  std::vector<std::size_t> order;
  for (std::size_t f = 0; f < counts.size(); ++f)
    if (counts[f] > 0) order.push_back(f);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t f : order)
    out.emplace_back(model.feature_names[f],
                     100.0 * static_cast<double>(counts[f]) / static_cast<double>(total));
  return out;
}

std::string format_feature_importance(const std::vector<std::pair<std::string, double>>& imp) {
  std::string out = "feature,percent\n";
  for (const auto& [name, pct] : imp) out += name + "," + format_sig9(pct) + "\n";
  return out;
}

std::string format_model(const BoostedModel& model) {
  std::string out;
  out += kModelMagic;
  out += "\nobjective ";
  out += objective_name(model.objective);
  out += "\nbase_score " + format_exact(model.base_score) + "\n";
  for (const auto& [k, v] : param_entries(model.params)) out += "param " + k + " " + v + "\n";
  out += "features " + std::to_string(model.feature_names.size()) + "\n";
  for (const auto& name : model.feature_names) out += name + "\n";
  out += "include_pcs " + std::string(model.include_pcs ? "1" : "0") + "\n";
  out += "normalizer " + std::to_string(model.normalizer.size()) + "\n";
  for (const auto& mm : model.normalizer)
    out += format_exact(mm.min) + " " + format_exact(mm.max) + "\n";
  out += "encoders " + std::to_string(model.encoder.columns.size()) + "\n";
  for (const auto& [column, enc] : model.encoder.columns) {
    out += "encoder " + column + " " + std::to_string(enc.size()) + "\n";
    for (const auto& v : enc.values()) out += v + "\n";
  }
  out += "trees " + std::to_string(model.trees.size()) + "\n";
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& tree = model.trees[t];
    out += "tree " + std::to_string(t) + " " + std::to_string(tree.nodes.size()) + "\n";
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        out += "leaf " + format_exact(node.weight) + "\n";
      } else {
        out += "split " + std::to_string(node.feature) + " " + format_exact(node.threshold) + " " +
               (node.default_left ? "1" : "0") + " " + std::to_string(node.left) + " " +
               std::to_string(node.right) + "\n";
      }
    }
  }
  out += "end\n";
  return out;
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::string_view next() {
    if (pos_ >= text_.size()) fail("unexpected end of model file");
    const std::size_t end = std::min(text_.find('\n', pos_), text_.size());
    std::string_view line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_;
    return line;
  }

  // Splits "key rest" and checks the key.
  std::string_view expect(std::string_view key) {
    const std::string_view line = next();
    if (line.substr(0, key.size()) != key ||
        (line.size() > key.size() && line[key.size()] != ' '))
      fail("expected '" + std::string(key) + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string_view{};
  }

  std::size_t expect_count(std::string_view key) {
    return static_cast<std::size_t>(parse_int(expect(key)));
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("model file line " + std::to_string(line_) + ": " + what);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

}  // namespace

BoostedModel parse_model(std::string_view text) {
  LineReader in(text);
  BoostedModel model;
  if (in.next() != kModelMagic) in.fail("not a ctxrank model (bad header)");
  try {
    model.objective = parse_objective(in.expect("objective"));
    model.base_score = parse_double(in.expect("base_score"));
    for (std::size_t i = 0; i < param_entries(BoostParams{}).size(); ++i) {
      const std::string_view rest = in.expect("param");
      const auto sp = rest.find(' ');
      if (sp == std::string_view::npos) in.fail("malformed param line");
      set_param(model.params, rest.substr(0, sp), rest.substr(sp + 1));
    }
    const std::size_t nf = in.expect_count("features");
    for (std::size_t i = 0; i < nf; ++i) model.feature_names.emplace_back(in.next());
    model.include_pcs = in.expect("include_pcs") == "1";
    const std::size_t nn = in.expect_count("normalizer");
    for (std::size_t i = 0; i < nn; ++i) {
      const auto parts = csv::split(in.next(), ' ');
      if (parts.size() != 2) in.fail("malformed normalizer line");
      model.normalizer.push_back({parse_double(parts[0]), parse_double(parts[1])});
    }
    const std::size_t ne = in.expect_count("encoders");
    for (std::size_t i = 0; i < ne; ++i) {
      const std::string_view rest = in.expect("encoder");
      const auto sp = rest.rfind(' ');
      if (sp == std::string_view::npos) in.fail("malformed encoder line");
      LabelEncoder& enc = model.encoder.columns[std::string(rest.substr(0, sp))];
      const auto count = static_cast<std::size_t>(parse_int(rest.substr(sp + 1)));
      for (std::size_t k = 0; k < count; ++k) enc.fit_value(in.next());
    }
    const std::size_t nt = in.expect_count("trees");
    model.trees.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto header = csv::split(in.expect("tree"), ' ');
      if (header.size() != 2 || static_cast<std::size_t>(parse_int(header[0])) != t)
        in.fail("malformed tree header");
      const auto nodes = static_cast<std::size_t>(parse_int(header[1]));
      auto& tree = model.trees[t];
      for (std::size_t k = 0; k < nodes; ++k) {
        const auto parts = csv::split(in.next(), ' ');
        TreeNode node;
        if (parts.size() == 2 && parts[0] == "leaf") {
          node.weight = parse_double(parts[1]);
        } else if (parts.size() == 6 && parts[0] == "split") {
          node.feature = static_cast<int>(parse_int(parts[1]));
          node.threshold = parse_double(parts[2]);
          node.default_left = parts[3] == "1";
          node.left = static_cast<int>(parse_int(parts[4]));
          node.right = static_cast<int>(parse_int(parts[5]));
          if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= nf ||
              node.left <= static_cast<int>(k) || node.right <= static_cast<int>(k) ||
              static_cast<std::size_t>(std::max(node.left, node.right)) >= nodes)
            in.fail("split node references out of range");
        } else {
          in.fail("malformed node line");
        }
        tree.nodes.push_back(node);
      }
    }
    in.expect("end");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind("model file", 0) == 0) throw;
    in.fail(what);
  }
  return model;
}

void save_model(const std::filesystem::path& path, const BoostedModel& model) {
  csv::write_file(path, format_model(model));
}

BoostedModel load_model(const std::filesystem::path& path) {
  return parse_model(csv::read_file(path));
}

std::string format_train_log(const std::vector<TrainLogRow>& log) {
  std::string out = "round,train_loss,valid_mrr\n";
  for (const auto& row : log)
    out += std::to_string(row.round) + "," + format_exact(row.train_loss) + "," +
           (is_missing(row.valid_mrr) ? std::string() : format_exact(row.valid_mrr)) + "\n";
  return out;
}

}  // namespace ctxrank::gbdt
