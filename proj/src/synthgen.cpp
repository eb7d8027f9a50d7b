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

#include "ctxrank/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxrank/csv.hpp"
#include "ctxrank/parallel.hpp"
#include "ctxrank/pcs.hpp"

namespace ctxrank::synth {

namespace {

// Draws index k with probability proportional to 1 / (k + 1)^exponent.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cumulative_(n) {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      total += 1.0 / std::pow(static_cast<double>(k + 1), exponent);
      cumulative_[k] = total;
    }
  }
  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                 cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

std::string padded(char prefix, std::size_t value, std::size_t count) {
  const std::size_t width = std::to_string(count).size();
  std::string digits = std::to_string(value);
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') +
         digits;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

struct Session {
  std::size_t user = 0;
  Day date = 0;
  std::array<std::size_t, 2> hot{};
};

ProductCatalog make_catalog(const SynthConfig& cfg, Rng& rng) {
  std::vector<std::string> singles = {"brand", "category", "main_colour"};
  for (std::size_t a = singles.size(); a < cfg.k_single; ++a)
    singles.push_back("attribute_" + std::to_string(a + 1));
  std::vector<std::string> lists;
  for (std::size_t a = 0; a < cfg.k_list; ++a)
    lists.push_back(a == 0 ? "materials" : a == 1 ? "tags" : "list_" + std::to_string(a + 1));
  std::vector<std::string> numerics = {"product_price", "start_online_date"};
  for (std::size_t a = numerics.size(); a < cfg.k_numeric; ++a)
    numerics.push_back("measure_" + std::to_string(a + 1));

  // Few popular brands and colours: Zipf-skewed value draws.
  const std::vector<std::size_t> cardinality = {40, 12, 10};
  std::vector<ZipfSampler> single_draw;
  for (std::size_t a = 0; a < cfg.k_single; ++a)
    single_draw.emplace_back(a < cardinality.size() ? cardinality[a] : 6, 1.0);
  const std::size_t vocab = 20;
  const ZipfSampler token_draw(vocab, 1.0);

  ProductCatalog catalog(singles, lists, numerics);
  for (std::size_t p = 0; p < cfg.n_products; ++p) {
    std::vector<std::string> s;
    for (std::size_t a = 0; a < cfg.k_single; ++a)
      s.push_back(singles[a].substr(0, 3) + "_" + std::to_string(single_draw[a](rng) + 1));
    std::vector<std::vector<std::string>> l;
    for (std::size_t a = 0; a < cfg.k_list; ++a) {
      const std::size_t len = rng.below(4);
      std::vector<std::string> tokens;
      for (std::size_t t = 0; t < len; ++t) {
        std::string tok = "t" + std::to_string(token_draw(rng) + 1);
        if (std::find(tokens.begin(), tokens.end(), tok) == tokens.end())
          tokens.push_back(std::move(tok));
      }
      l.push_back(std::move(tokens));
    }
    std::vector<double> n;
    n.push_back(round2(std::exp(std::log(250.0) + 0.4 * rng.normal())));
    n.push_back(static_cast<double>(cfg.start_date - static_cast<Day>(rng.below(1500))));
    for (std::size_t a = 2; a < cfg.k_numeric; ++a) n.push_back(round2(rng.uniform(0.0, 100.0)));
    catalog.add_product(padded('p', p + 1, cfg.n_products), std::move(s), std::move(l),
                        std::move(n));
  }
  return catalog;
}

}  // namespace

SynthConfig SynthConfig::for_queries(std::size_t n_queries) {
  SynthConfig cfg;
  cfg.n_queries = n_queries;
  cfg.n_users = std::max<std::size_t>(1, n_queries / 6);
  cfg.n_sessions = std::max<std::size_t>(1, n_queries / 3);
  cfg.n_products = std::max<std::size_t>(20, n_queries);
  return cfg;
}

SynthConfig SynthConfig::context_dominant(std::size_t n_queries) {
  SynthConfig cfg = for_queries(n_queries);
  cfg.weights.context = 30.0;
  cfg.context_threshold = 0.45;
  return cfg;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("synth config: " + what); };
  if (n_queries == 0 || n_users == 0 || n_sessions == 0) fail("counts must be positive");
  if (n_products < kImpressionSize + 1)
    fail("n_products must be at least " + std::to_string(kImpressionSize + 1));
  if (k_single < 3) fail("k_single must be >= 3 (brand, category, main_colour)");
  if (k_numeric < 2) fail("k_numeric must be >= 2 (product_price, start_online_date)");
  if (!(click_noise > 0.0)) fail("click_noise must be > 0");
  if (weeks < 1) fail("weeks must be >= 1");
  for (double w : {weights.price, weights.context, weights.session})
    if (!std::isfinite(w)) fail("signal weights must be finite");
}

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0));
  ProductCatalog catalog = make_catalog(cfg, rng);
  const NormalizedCatalog normalized = normalize_numerics(catalog);
  const std::size_t price_attr = *catalog.numeric_index("product_price");
  const std::size_t category_attr = *catalog.single_index("category");

  // Popularity is independent of the product numbering.
  std::vector<std::size_t> by_popularity(cfg.n_products);
  std::iota(by_popularity.begin(), by_popularity.end(), std::size_t{0});
  for (std::size_t i = by_popularity.size(); i > 1; --i)
    std::swap(by_popularity[i - 1], by_popularity[rng.below(i)]);
  const ZipfSampler popularity(cfg.n_products, 0.8);

  std::vector<std::vector<std::size_t>> category_members;
  for (std::size_t p = 0; p < cfg.n_products; ++p) {
    const auto code = static_cast<std::size_t>(normalized.single_code(p, category_attr));
    if (category_members.size() <= code) category_members.resize(code + 1);
    category_members[code].push_back(p);
  }

  std::vector<int> user_tier(cfg.n_users);
  for (auto& t : user_tier) t = static_cast<int>(rng.below(4));
  std::vector<Session> sessions(cfg.n_sessions);
  for (auto& s : sessions) {
    s.user = rng.below(cfg.n_users);
    s.date = cfg.start_date + static_cast<Day>(rng.below(static_cast<std::uint64_t>(cfg.weeks) * 7));
    s.hot = {by_popularity[popularity(rng)], by_popularity[popularity(rng)]};
  }

  std::vector<ImpressionRow> rows(cfg.n_queries * kImpressionSize);
  PlantedTruth truth;
  truth.beta = cfg.weights.context;
  truth.context_threshold = cfg.context_threshold;
  truth.click_probabilities.resize(cfg.n_queries);

  parallel_for(cfg.n_queries, [&](std::size_t qb, std::size_t qe) {
    for (std::size_t q = qb; q < qe; ++q) {
      Rng qrng(derive_seed(cfg.seed, q + 1));
      const std::size_t sid = qrng.below(cfg.n_sessions);
      const Session& session = sessions[sid];
      const std::size_t context = by_popularity[popularity(qrng)];

      std::vector<std::size_t> cand;
      auto try_add = [&](std::size_t p) {
        if (p == context || std::find(cand.begin(), cand.end(), p) != cand.end()) return false;
        cand.push_back(p);
        return true;
      };
      const auto& peers = category_members[static_cast<std::size_t>(
          normalized.single_code(context, category_attr))];
      for (int attempt = 0; attempt < 16 && cand.empty() && peers.size() > 1; ++attempt)
        try_add(peers[qrng.below(peers.size())]);
      if (qrng.bernoulli(0.5)) try_add(session.hot[qrng.below(2)]);
      while (cand.size() < kImpressionSize) {
        // Rejection on duplicates; fall back to uniform draws so tiny
        // catalogs dominated by one product still terminate quickly.
        const std::size_t p = qrng.bernoulli(0.9) ? by_popularity[popularity(qrng)]
                                                  : qrng.below(cfg.n_products);
        try_add(p);
      }
      for (std::size_t i = cand.size(); i > 1; --i) std::swap(cand[i - 1], cand[qrng.below(i)]);

      std::array<double, kImpressionSize> sim{}, utility{};
      double max_sim = 0.0;
      for (std::size_t k = 0; k < kImpressionSize; ++k) {
        sim[k] = pcs(cand[k], context, normalized);
        max_sim = std::max(max_sim, sim[k]);
      }
      const bool context_active = !cfg.context_threshold || max_sim >= *cfg.context_threshold;
      double max_u = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < kImpressionSize; ++k) {
        const bool hot = cand[k] == session.hot[0] || cand[k] == session.hot[1];
        utility[k] = -cfg.weights.price * normalized.numeric(cand[k], price_attr) +
                     (context_active ? cfg.weights.context * sim[k] : 0.0) +
                     cfg.weights.session * (hot ? 1.0 : 0.0);
        max_u = std::max(max_u, utility[k]);
      }
      auto& prob = truth.click_probabilities[q];
      double total = 0.0;
      for (std::size_t k = 0; k < kImpressionSize; ++k) {
        prob[k] = std::exp((utility[k] - max_u) / cfg.click_noise);
        total += prob[k];
      }
      for (auto& p : prob) p /= total;

      const double u = qrng.uniform();
      std::size_t clicked = kImpressionSize - 1;
      double acc = 0.0;
      for (std::size_t k = 0; k < kImpressionSize; ++k) {
        acc += prob[k];
        if (u < acc) {
          clicked = k;
          break;
        }
      }

      const std::string qid = padded('q', q + 1, cfg.n_queries);
      for (std::size_t k = 0; k < kImpressionSize; ++k) {
        auto& r = rows[q * kImpressionSize + k];
        r.query_id = qid;
        r.user_id = padded('u', session.user + 1, cfg.n_users);
        r.session_id = padded('s', sid + 1, cfg.n_sessions);
        r.context_product_id = catalog.product_ids()[context];
        r.product_id = catalog.product_ids()[cand[k]];
        r.is_click = static_cast<std::int8_t>(k == clicked);
        r.observation_date = session.date;
        r.user_tier = user_tier[session.user];
      }
    }
  });

  SynthData out;
  out.impressions = ImpressionTable::from_rows(std::move(rows));
  out.catalog = std::move(catalog);
  out.truth = std::move(truth);
  return out;
}

std::string format_truth(const ImpressionTable& impressions, const PlantedTruth& truth) {
  std::string out(kTruthHeader);
  out += '\n';
  const auto& groups = impressions.queries();
  for (std::size_t q = 0; q < groups.size(); ++q) {
    for (std::size_t k = 0; k < groups[q].size; ++k) {
      const auto& r = impressions.row(groups[q].begin + k);
      out += r.query_id + ',' + r.product_id + ',' +
             format_exact(truth.click_probabilities[q][k]) + '\n';
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const SynthData& data) {
  write_impressions(dir / "impressions.csv", data.impressions);
  write_catalog(dir / "catalog.csv", data.catalog);
  csv::write_file(dir / "truth.csv", format_truth(data.impressions, data.truth));
}

}  // namespace ctxrank::synth
