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
#include <string>
#include <utility>
#include <vector>

#include "ctxrank/common.hpp"

namespace ctxrank::tuning {

// One searched parameter. A non-empty `choices` makes it categorical and
// the bounds are ignored.
struct ParamDim {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool integer = false;
  bool log_scale = false;
  std::vector<double> choices;
};

struct SearchSpace {
  std::vector<ParamDim> dims;

  // Finite bounds with lower < upper, positive bounds on log dims.
  void validate() const;
  std::size_t size() const { return dims.size(); }
};

// Learning rate, tree shape, sampling fractions, regularization and class
// weight: the ten knobs tuned for the shipped presets.
SearchSpace default_space();

// Values in the order of the space's dims.
using ParamPoint = std::vector<std::pair<std::string, double>>;

struct Trial {
  ParamPoint params;
  double mrr = 0.0;
  double seconds = 0.0;
};

struct TrialHistory {
  std::vector<Trial> trials;

  // Earliest trial with the maximal mrr.
  std::optional<std::size_t> incumbent() const;
};

// Maps a point of the unit cube onto the space: linear or log
// interpolation, integers rounded, categoricals by equal-width cells.
ParamPoint from_unit(const SearchSpace& space, const Eigen::VectorXd& u);
Eigen::VectorXd to_unit(const SearchSpace& space, const ParamPoint& point);

// One rng.uniform() per dim, in dim order, pushed through from_unit.
ParamPoint random_point(const SearchSpace& space, Rng& rng);

std::size_t initial_trials(const SearchSpace& space);  // max(5, dims)

struct SuggestOptions {
  bool random_only = false;
  std::size_t candidates = 1024;
  double xi = 0.01;
};

// Random point (Rng(seed)) while the history is shorter than
// initial_trials(space) or random_only is set; otherwise the expected-
// improvement maximizer of a Matern-5/2 Gaussian process over `candidates`
// uniform draws from Rng(seed).
ParamPoint suggest_next(const TrialHistory& history, const SearchSpace& space,
                        std::uint64_t seed, const SuggestOptions& options = {});

// Gaussian-process regression on unit-cube inputs; exposed for tests.
class GaussianProcess {
 public:
  // y is standardized internally; the length scale maximizes the marginal
  // likelihood over a fixed grid.
  GaussianProcess(Eigen::MatrixXd x, const Eigen::VectorXd& y);

  // Posterior mean and standard deviation in standardized units.
  std::pair<double, double> predict(const Eigen::VectorXd& x) const;
  double length_scale() const { return length_scale_; }
  double standardize(double y) const { return (y - y_mean_) / y_scale_; }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double length_scale_ = 0.2;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
};

double matern52(double distance, double length_scale);
double expected_improvement(double mean, double sd, double best, double xi);

using EvalFn = std::function<double(const ParamPoint&)>;

struct TuneOptions {
  std::size_t budget = 25;
  std::uint64_t seed = 0;
  SuggestOptions suggest;
  // Rewritten after every trial when set.
  std::optional<std::filesystem::path> history_path;
  // Continue from the trials already in history_path.
  bool resume = false;
};

struct TuneResult {
  ParamPoint best;
  double best_mrr = 0.0;
  TrialHistory history;
};

// Trial t is suggested with seed derive_seed(options.seed, t). A trial
// whose evaluation throws or returns NaN is recorded with mrr 0.
TuneResult tune(const EvalFn& evaluate, const SearchSpace& space, const TuneOptions& options);

// `trial,mrr,seconds,params` with params as space-separated key=value.
std::string format_history(const TrialHistory& history);
TrialHistory parse_history(const std::string& text, const SearchSpace& space);

}  // namespace ctxrank::tuning
