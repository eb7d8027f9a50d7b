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

#include "ctxrank/rank_eval.hpp"

#include <algorithm>
#include <numeric>

#include "ctxrank/csv.hpp"
#include "ctxrank/parallel.hpp"

namespace ctxrank {

namespace {

double pcs_or_zero(double v) { return is_missing(v) ? 0.0 : v; }
double score_key(double v) { return is_missing(v) ? -std::numeric_limits<double>::infinity() : v; }

}  // namespace

RankedImpression rank_impression(const ScoredImpression& in, double threshold) {
  const std::size_t n = in.product_ids.size();
  if (n != kImpressionSize || in.scores.size() != n || in.pcs.size() != n)
    throw ValidationError("query '" + in.query_id + "' has " + std::to_string(n) +
                          " candidates, expected " + std::to_string(kImpressionSize));
  double max_pcs = 0.0;
  for (double p : in.pcs) max_pcs = std::max(max_pcs, pcs_or_zero(p));
  const bool filter = max_pcs >= threshold;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (filter) {
      const double pa = pcs_or_zero(in.pcs[a]), pb = pcs_or_zero(in.pcs[b]);
      if (pa != pb) return pa > pb;
    }
    const double sa = score_key(in.scores[a]), sb = score_key(in.scores[b]);
    if (sa != sb) return sa > sb;
    return in.product_ids[a] < in.product_ids[b];
  });

  RankedImpression out;
  out.query_id = in.query_id;
  out.filter_applied = filter;
  for (std::size_t i : order) {
    out.product_ids.push_back(in.product_ids[i]);
    out.scores.push_back(in.scores[i]);
    out.pcs.push_back(in.pcs[i]);
  }
  return out;
}

std::vector<RankedImpression> rank_all(std::span<const ScoredImpression> impressions,
                                       double threshold) {
  std::vector<RankedImpression> out(impressions.size());
  parallel_for(impressions.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = rank_impression(impressions[i], threshold);
  });
  return out;
}

std::vector<ScoredImpression> group_scores(const ImpressionTable& rows,
                                           std::span<const double> scores,
                                           std::span<const double> pcs) {
  if (scores.size() != rows.size() || pcs.size() != rows.size())
    throw ValidationError("score/pcs length does not match the impression table");
  std::vector<ScoredImpression> out;
  out.reserve(rows.num_queries());
  for (const auto& g : rows.queries()) {
    ScoredImpression s;
    s.query_id = g.query_id;
    for (std::size_t r = g.begin; r < g.begin + g.size; ++r) {
      s.product_ids.push_back(rows.row(r).product_id);
      s.scores.push_back(is_missing(scores[r]) ? scores[r] : round_sig9(scores[r]));
      s.pcs.push_back(is_missing(pcs[r]) ? pcs[r] : round_sig9(pcs[r]));
    }
    out.push_back(std::move(s));
  }
  return out;
}

ClickLabels click_labels(const ImpressionTable& rows) {
  ClickLabels labels;
  for (const auto& g : rows.queries()) {
    std::vector<std::string> clicked;
    bool labeled = false;
    for (std::size_t r = g.begin; r < g.begin + g.size; ++r) {
      const auto& row = rows.row(r);
      if (!row.is_click) continue;
      labeled = true;
      if (*row.is_click == 1) clicked.push_back(row.product_id);
    }
    if (labeled) labels[g.query_id] = std::move(clicked);
  }
  return labels;
}

MrrResult mrr(std::span<const RankedImpression> rankings, const ClickLabels& labels) {
  MrrResult result;
  double total = 0.0;
  for (const auto& r : rankings) {
    const auto it = labels.find(r.query_id);
    if (it == labels.end())
      throw ValidationError("query '" + r.query_id + "' has no labels");
    const auto& clicked = it->second;
    std::size_t rank = 0;
    for (std::size_t pos = 0; pos < r.product_ids.size(); ++pos)
      if (std::find(clicked.begin(), clicked.end(), r.product_ids[pos]) != clicked.end()) {
        rank = pos + 1;
        break;
      }
    if (rank == 0) {
      ++result.excluded;
      continue;
    }
    total += 1.0 / static_cast<double>(rank);
    ++result.evaluated;
  }
  result.value = result.evaluated > 0 ? total / static_cast<double>(result.evaluated) : 0.0;
  return result;
}

ThresholdCurve threshold_sweep(std::span<const ScoredImpression> impressions,
                               const ClickLabels& labels, std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("threshold grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw ValidationError("threshold grid must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw ValidationError("threshold grid must be strictly increasing");
  }
  ThresholdCurve curve;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto ranked = rank_all(impressions, grid[i]);
    const double value = mrr(ranked, labels).value;
    curve.points.push_back({grid[i], value});
    if (i == 0 || value > curve.best_mrr) {
      curve.best_mrr = value;
      curve.best_threshold = grid[i];
    }
  }
  return curve;
}

std::vector<double> parse_grid(std::string_view spec) {
  const auto parts = csv::split(spec, ':');
  if (parts.size() != 3) throw ValidationError("grid must look like lo:hi:step, got '" + std::string(spec) + "'");
  const double lo = parse_double(parts[0]);
  const double hi = parse_double(parts[1]);
  const double step = parse_double(parts[2]);
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ValidationError("grid needs lo <= hi and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 1000000) throw ValidationError("grid has too many points");
  std::vector<double> grid;
  for (std::size_t k = 0; k < count; ++k) {
    // snap to 12 decimals so 0.30 + 3 * 0.03 prints as 0.39
    const double v = lo + static_cast<double>(k) * step;
    grid.push_back(std::round(v * 1e12) / 1e12);
  }
  return grid;
}

std::vector<double> default_grid() { return parse_grid("0.30:0.60:0.03"); }

std::string format_predictions(std::span<const RankedImpression> rankings) {
  std::string out(kPredictionsHeader);
  out += '\n';
  for (const auto& r : rankings)
    for (std::size_t pos = 0; pos < r.product_ids.size(); ++pos) {
      out += r.query_id;
      out += ',';
      out += r.product_ids[pos];
      out += ',' + std::to_string(pos + 1) + ',';
      if (!is_missing(r.scores[pos])) out += format_sig9(r.scores[pos]);
      out += ',';
      if (!is_missing(r.pcs[pos])) out += format_sig9(r.pcs[pos]);
      out += r.filter_applied ? ",1\n" : ",0\n";
    }
  return out;
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const RankedImpression> rankings) {
  csv::write_file(path, format_predictions(rankings));
}

std::vector<ScoredImpression> parse_predictions(std::string text, const std::string& source) {
  const auto table = csv::Table::parse(std::move(text), source);
  const std::size_t q = table.require_column("query_id");
  const std::size_t p = table.require_column("product_id");
  const std::size_t s = table.require_column("score");
  const std::size_t c = table.require_column("pcs");
  std::vector<ScoredImpression> out;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    const auto& row = table.row(i);
    try {
      const std::string qid(row[q]);
      auto [it, inserted] = index.try_emplace(qid, out.size());
      if (inserted) out.push_back(ScoredImpression{qid, {}, {}, {}});
      auto& imp = out[it->second];
      imp.product_ids.emplace_back(row[p]);
      imp.scores.push_back(row[s].empty() ? kMissing : parse_double(row[s]));
      imp.pcs.push_back(row[c].empty() ? kMissing : parse_double(row[c]));
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(table.line_number(i)) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ScoredImpression> load_predictions(const std::filesystem::path& path) {
  return parse_predictions(csv::read_file(path), path.string());
}

std::string format_sweep(const ThresholdCurve& curve) {
  std::string out = "threshold,mrr\n";
  for (const auto& pt : curve.points)
    out += format_exact(pt.threshold) + "," + format_exact(pt.mrr) + "\n";
  return out;
}

}  // namespace ctxrank
