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

#include "ctxrank/tune.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <numbers>

#include "ctxrank/csv.hpp"

namespace ctxrank::tuning {

void SearchSpace::validate() const {
  if (dims.empty()) throw ValidationError("search space has no parameters");
  for (const auto& d : dims) {
    if (!d.choices.empty()) {
      for (double c : d.choices)
        if (!std::isfinite(c)) throw ValidationError("parameter " + d.name + " has a non-finite choice");
      continue;
    }
    if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper))
      throw ValidationError("parameter " + d.name + " needs finite bounds with lower < upper");
    if (d.log_scale && !(d.lower > 0.0))
      throw ValidationError("log-scaled parameter " + d.name + " needs a positive lower bound");
  }
}

SearchSpace default_space() {
  SearchSpace s;
  s.dims = {
      {"learning_rate", 1e-4, 0.5, false, true, {}},
      {"max_leaves", 4, 64, true, false, {}},
      {"max_depth", 3, 12, true, false, {}},
      {"subsample", 0.5, 1.0, false, false, {}},
      {"colsample_bytree", 0.3, 1.0, false, false, {}},
      {"colsample_bylevel", 0.3, 1.0, false, false, {}},
      {"reg_alpha", 0.0, 10.0, false, false, {}},
      {"reg_lambda", 0.0, 10.0, false, false, {}},
      {"scale_pos_weight", 1.0, 50.0, false, true, {}},
      {"min_child_weight", 0.0, 10.0, false, false, {}},
  };
  return s;
}

std::optional<std::size_t> TrialHistory::incumbent() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i)
    if (!best || trials[i].mrr > trials[*best].mrr) best = i;
  return best;
}

namespace {

double map_dim(const ParamDim& d, double u) {
  u = std::clamp(u, 0.0, 1.0);
  if (!d.choices.empty()) {
    const auto k = d.choices.size();
    return d.choices[std::min(static_cast<std::size_t>(u * static_cast<double>(k)), k - 1)];
  }
  double x = d.log_scale ? std::exp(std::log(d.lower) + u * (std::log(d.upper) - std::log(d.lower)))
                         : d.lower + u * (d.upper - d.lower);
  if (d.integer) x = std::round(x);
  return std::clamp(x, d.lower, d.upper);
}

double unmap_dim(const ParamDim& d, double x) {
  if (!d.choices.empty()) {
    const auto it = std::find(d.choices.begin(), d.choices.end(), x);
    const auto idx = static_cast<double>(it == d.choices.end() ? 0 : it - d.choices.begin());
    return (idx + 0.5) / static_cast<double>(d.choices.size());
  }
  const double u = d.log_scale
                       ? (std::log(x) - std::log(d.lower)) / (std::log(d.upper) - std::log(d.lower))
                       : (x - d.lower) / (d.upper - d.lower);
  return std::clamp(u, 0.0, 1.0);
}

}  // namespace

ParamPoint from_unit(const SearchSpace& space, const Eigen::VectorXd& u) {
  ParamPoint out;
  for (std::size_t i = 0; i < space.dims.size(); ++i)
    out.emplace_back(space.dims[i].name, map_dim(space.dims[i], u[static_cast<Eigen::Index>(i)]));
  return out;
}

Eigen::VectorXd to_unit(const SearchSpace& space, const ParamPoint& point) {
  if (point.size() != space.dims.size()) throw ValidationError("point does not match search space");
  Eigen::VectorXd u(static_cast<Eigen::Index>(point.size()));
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (point[i].first != space.dims[i].name)
      throw ValidationError("point parameter '" + point[i].first + "' does not match search space");
    u[static_cast<Eigen::Index>(i)] = unmap_dim(space.dims[i], point[i].second);
  }
  return u;
}

ParamPoint random_point(const SearchSpace& space, Rng& rng) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(space.dims.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform();
  return from_unit(space, u);
}

std::size_t initial_trials(const SearchSpace& space) {
  return std::max<std::size_t>(5, space.dims.size());
}

double matern52(double r, double length_scale) {
  const double s = std::sqrt(5.0) * r / length_scale;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double expected_improvement(double mean, double sd, double best, double xi) {
  const double imp = mean - best - xi;
  if (!(sd > 0.0)) return std::max(imp, 0.0);
  const double z = imp / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return imp * cdf + sd * pdf;
}

namespace {

constexpr double kNoise = 1e-6;
constexpr double kLengthGrid[] = {0.05, 0.1, 0.2, 0.4, 0.8};

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, double ell) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = matern52((x.row(i) - x.row(j)).norm(), ell);
      k(i, j) = k(j, i) = v;
    }
  k.diagonal().array() += kNoise;
  return k;
}

}  // namespace

GaussianProcess::GaussianProcess(Eigen::MatrixXd x, const Eigen::VectorXd& y) : x_(std::move(x)) {
  const Eigen::Index n = y.size();
  y_mean_ = y.mean();
  const double var = n > 1 ? (y.array() - y_mean_).square().sum() / static_cast<double>(n) : 0.0;
  y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd ys = (y.array() - y_mean_) / y_scale_;

  double best_lml = -std::numeric_limits<double>::infinity();
  for (double ell : kLengthGrid) {
    Eigen::LLT<Eigen::MatrixXd> llt(kernel_matrix(x_, ell));
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd a = llt.solve(ys);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double lml = -0.5 * ys.dot(a) - 0.5 * log_det;
    if (lml > best_lml) {
      best_lml = lml;
      length_scale_ = ell;
      llt_ = llt;
      alpha_ = a;
    }
  }
  if (alpha_.size() != n) {
    // every grid point failed to factor; fall back to a heavier nugget
    Eigen::MatrixXd k = kernel_matrix(x_, length_scale_);
    k.diagonal().array() += 1e-3;
    llt_.compute(k);
    alpha_ = llt_.solve(ys);
  }
}

std::pair<double, double> GaussianProcess::predict(const Eigen::VectorXd& x) const {
  const Eigen::Index n = x_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k[i] = matern52((x_.row(i).transpose() - x).norm(), length_scale_);
  const double mean = k.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(k);
  const double var = std::max(1.0 + kNoise - v.squaredNorm(), 0.0);
  return {mean, std::sqrt(var)};
}

ParamPoint suggest_next(const TrialHistory& history, const SearchSpace& space,
                        std::uint64_t seed, const SuggestOptions& options) {
  space.validate();
  Rng rng(seed);
  if (options.random_only || history.trials.size() < initial_trials(space))
    return random_point(space, rng);

  const auto n = static_cast<Eigen::Index>(history.trials.size());
  const auto d = static_cast<Eigen::Index>(space.dims.size());
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = to_unit(space, history.trials[static_cast<std::size_t>(i)].params).transpose();
    y[i] = history.trials[static_cast<std::size_t>(i)].mrr;
  }
  const GaussianProcess gp(x, y);
  const double best = gp.standardize(y.maxCoeff());

  Eigen::VectorXd best_u;
  double best_ei = -1.0;
  Eigen::VectorXd u(d);
  for (std::size_t c = 0; c < options.candidates; ++c) {
    for (Eigen::Index j = 0; j < d; ++j) u[j] = rng.uniform();
    // score the point that would actually be evaluated
    const Eigen::VectorXd snapped = to_unit(space, from_unit(space, u));
    const auto [mean, sd] = gp.predict(snapped);
    const double ei = expected_improvement(mean, sd, best, options.xi);
    if (ei > best_ei) {
      best_ei = ei;
      best_u = u;
    }
  }
  return from_unit(space, best_u);
}

std::string format_history(const TrialHistory& history) {
  std::string out = "trial,mrr,seconds,params\n";
  for (std::size_t t = 0; t < history.trials.size(); ++t) {
    const auto& trial = history.trials[t];
    out += std::to_string(t) + "," + format_exact(trial.mrr) + "," + format_exact(trial.seconds) + ",";
    for (std::size_t i = 0; i < trial.params.size(); ++i) {
      if (i > 0) out += ' ';
      out += trial.params[i].first + "=" + format_exact(trial.params[i].second);
    }
    out += '\n';
  }
  return out;
}

TrialHistory parse_history(const std::string& text, const SearchSpace& space) {
  const auto table = csv::Table::parse(text, "tune history");
  const std::size_t mrr_col = table.require_column("mrr");
  const std::size_t sec_col = table.require_column("seconds");
  const std::size_t par_col = table.require_column("params");
  TrialHistory history;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto& row = table.row(r);
    Trial trial;
    trial.mrr = parse_double(row[mrr_col]);
    trial.seconds = parse_double(row[sec_col]);
    for (const auto item : csv::split(row[par_col], ' ')) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos)
        throw ValidationError("tune history line " + std::to_string(table.line_number(r)) +
                              ": malformed parameter '" + std::string(item) + "'");
      trial.params.emplace_back(std::string(item.substr(0, eq)), parse_double(item.substr(eq + 1)));
    }
    (void)to_unit(space, trial.params);  // rejects histories from another space
    history.trials.push_back(std::move(trial));
  }
  return history;
}

TuneResult tune(const EvalFn& evaluate, const SearchSpace& space, const TuneOptions& options) {
  space.validate();
  if (options.budget < 1) throw ValidationError("tuning budget must be >= 1");
  TuneResult result;
  TrialHistory& history = result.history;
  if (options.resume && options.history_path && std::filesystem::exists(*options.history_path))
    history = parse_history(csv::read_file(*options.history_path), space);

  while (history.trials.size() < options.budget) {
    const std::size_t t = history.trials.size();
    Trial trial;
    trial.params = suggest_next(history, space, derive_seed(options.seed, t), options.suggest);
    const auto start = std::chrono::steady_clock::now();
    try {
      trial.mrr = evaluate(trial.params);
      if (is_missing(trial.mrr)) trial.mrr = 0.0;
    } catch (const std::exception& e) {
      std::clog << "trial " << t << " failed: " << e.what() << "\n";
      trial.mrr = 0.0;
    }
    trial.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.trials.push_back(std::move(trial));
    if (options.history_path) csv::write_file(*options.history_path, format_history(history));
  }
  if (const auto inc = history.incumbent()) {
    result.best = history.trials[*inc].params;
    result.best_mrr = history.trials[*inc].mrr;
  }
  return result;
}

}  // namespace ctxrank::tuning
