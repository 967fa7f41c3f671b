/*
 * Copyright 2026 The wpultr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "wpultr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "wpultr/random.hpp"
#include "wpultr/special_functions.hpp"

namespace wpultr {
namespace {

constexpr double kSumTolerance = 1e-9;

bool rows_identical(const std::vector<std::vector<double>>& rows) {
  for (const auto& r : rows) {
    if (r != rows.front()) return false;
  }
  return true;
}

bool all_equal(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

bool heights_identical(const std::vector<HeightModel>& h) {
  for (const auto& m : h) {
    if (m.mean != h.front().mean || m.sd != h.front().sd) return false;
  }
  return true;
}

std::string fixed_id(char prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, width, value);
  return buf;
}

int score_bin(double score, const std::array<double, kScoreBins>& edges) {
  int bin = 0;
  while (bin < kScoreBins - 1 && score > edges[bin]) ++bin;
  return bin;
}

struct QueryDraw {
  std::vector<ImpressionRecord> records;
};

QueryDraw generate_query(const ScmConfig& config, int q,
                         const std::array<double, kScoreBins>& edges,
                         double height_mean, double height_sd) {
  Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(q));
  const int n = config.docs_per_query;
  const auto& df = config.doc_features;
  const double leak = df.score_leak;
  const double hidden = std::sqrt(std::max(0.0, 1.0 - leak * leak));

  std::vector<int> grade(n);
  std::vector<double> score(n);
  std::vector<Eigen::VectorXd> features(n);
  for (int d = 0; d < n; ++d) {
    grade[d] = sample_categorical(config.relevance_prior, rng);
    const double visible = standard_normal(rng);
    const double eta = standard_normal(rng);
    score[d] = grade[d] + config.score_noise_sd * (leak * visible + hidden * eta);
    Eigen::VectorXd f(df.dim);
    for (int k = 0; k < df.dim; ++k) {
      if (k == 0) {
        f(k) = grade[d] + df.relevance_noise_sd * standard_normal(rng);
      } else if (k == 1) {
        f(k) = visible;
      } else {
        f(k) = standard_normal(rng);
      }
    }
    features[d] = std::move(f);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // The logging policy ranks by r_hat, optionally perturbed by exploration
  // noise the ranker never sees.
  std::vector<double> key = score;
  if (config.rank_noise_sd > 0) {
    for (auto& k : key) k += config.rank_noise_sd * standard_normal(rng);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return key[a] > key[b]; });

  std::vector<int> media(n);
  std::vector<double> height(n);
  for (int k = 0; k < n; ++k) {
    const int d = order[k];
    media[d] = sample_categorical(config.media_given_score[score_bin(score[d], edges)], rng);
    const auto& hm = config.height_given_media[media[d]];
    height[d] = hm.mean + hm.sd * standard_normal(rng);
  }
  const double page_max = *std::max_element(height.begin(), height.end());

  QueryDraw out;
  out.records.reserve(n);
  double running_max = -std::numeric_limits<double>::infinity();
  const auto& cc = config.click;
  for (int k = 0; k < n; ++k) {
    const int d = order[k];
    const int rank = k + 1;
    running_max = std::max(running_max, height[d]);
    const double max_height =
        config.max_height_mode == MaxHeightMode::kRunning ? running_max : page_max;
    const double height_z = height_sd > 0 ? (height[d] - height_mean) / height_sd : 0.0;
    const double media_effect = cc.media.empty() ? 0.0 : cc.media[media[d]];
    const double logit = cc.relevance * grade[d] + cc.position * position_score(rank) +
                         media_effect + cc.height * height_z + cc.bias;
    const int click = uniform01(rng) < sigmoid(logit) ? 1 : 0;

    ImpressionRecord r;
    r.query_id = fixed_id('q', q, 6);
    r.doc_id = fixed_id('d', d, 3);
    r.rank_position = rank;
    r.sepp = {static_cast<double>(rank), static_cast<double>(media[d]), height[d],
              max_height};
    r.doc_features = features[d];
    r.click = click;
    r.true_relevance = grade[d];
    r.logged_score = score[d];
    out.records.push_back(std::move(r));
  }
  return out;
}

double mixture_cdf(const ScmConfig& config, double x) {
  double acc = 0.0;
  for (int g = 0; g <= kMaxGrade; ++g) {
    const double p = config.relevance_prior[g];
    if (config.score_noise_sd > 0) {
      acc += p * normal_cdf((x - g) / config.score_noise_sd);
    } else {
      acc += x >= g ? p : 0.0;
    }
  }
  return acc;
}

}  // namespace

void ScmConfig::validate() const {
  if (n_queries < 0) throw ConfigError("scm.n_queries: must be >= 0");
  if (!(rank_noise_sd >= 0)) throw ConfigError("scm.rank_noise_sd: must be >= 0");
  if (docs_per_query < 1) throw ConfigError("scm.docs_per_query: must be >= 1");
  double total = 0.0;
  for (double p : relevance_prior) {
    if (p < 0) throw ConfigError("scm.relevance_prior: negative probability");
    total += p;
  }
  if (std::fabs(total - 1.0) > kSumTolerance) {
    throw ConfigError("scm.relevance_prior: must sum to 1");
  }
  if (!(score_noise_sd >= 0)) throw ConfigError("scm.score_noise_sd: must be >= 0");
  if (height_given_media.size() < 2) {
    throw ConfigError("scm.height_given_media: need at least 2 media types");
  }
  if (media_given_score.size() != static_cast<std::size_t>(kScoreBins)) {
    throw ConfigError("scm.media_given_score: need exactly 5 score-bin rows");
  }
  for (const auto& row : media_given_score) {
    if (row.size() != height_given_media.size()) {
      throw ConfigError("scm.media_given_score: row width must equal media count");
    }
    double s = 0.0;
    for (double p : row) {
      if (p < 0) throw ConfigError("scm.media_given_score: negative probability");
      s += p;
    }
    if (std::fabs(s - 1.0) > kSumTolerance) {
      throw ConfigError("scm.media_given_score: rows must sum to 1");
    }
  }
  for (const auto& h : height_given_media) {
    if (!(h.sd >= 0)) throw ConfigError("scm.height_given_media: sd must be >= 0");
  }
  if (!click.media.empty() && click.media.size() != height_given_media.size()) {
    throw ConfigError("scm.click_coeffs.d_media: one coefficient per media type");
  }
  if (doc_features.dim < 0) throw ConfigError("scm.doc_features.dim: must be >= 0");
  if (!(doc_features.relevance_noise_sd >= 0)) {
    throw ConfigError("scm.doc_features.relevance_noise_sd: must be >= 0");
  }
  if (doc_features.score_leak < 0 || doc_features.score_leak > 1) {
    throw ConfigError("scm.doc_features.score_leak: must lie in [0, 1]");
  }
}

ScmConfig ScmConfig::default_biased() {
  ScmConfig c;
  c.n_queries = 2000;
  c.docs_per_query = 10;
  c.relevance_prior = {0.3, 0.25, 0.2, 0.15, 0.1};
  c.score_noise_sd = 1.5;
  c.rank_noise_sd = 3.0;
  c.media_given_score = {{0.85, 0.10, 0.05},
                         {0.65, 0.25, 0.10},
                         {0.45, 0.35, 0.20},
                         {0.25, 0.40, 0.35},
                         {0.10, 0.35, 0.55}};
  c.height_given_media = {{100.0, 25.0}, {150.0, 30.0}, {200.0, 35.0}};
  c.click.relevance = 0.8;
  c.click.position = 5.0;
  c.click.media = {0.0, 1.0, 2.0};
  c.click.height = 0.0;
  c.click.bias = -3.0;
  c.doc_features = {4, 0.5, 1.0};
  c.max_height_mode = MaxHeightMode::kPage;
  c.seed = 1;
  return c;
}

ScmConfig ScmConfig::unconfounded() {
  ScmConfig c = default_biased();
  c.click.position = 0.0;
  c.click.media = {0.0, 0.0, 0.0};
  c.click.height = 0.0;
  c.click.bias = -2.0;
  return c;
}

double position_score(int rank) { return 1.0 / std::log2(rank + 1.0); }

std::array<double, kScoreBins> score_bin_edges(const ScmConfig& config) {
  std::array<double, kScoreBins> edges{};
  const double lo0 = -10.0 * (config.score_noise_sd + 1.0);
  const double hi0 = kMaxGrade + 10.0 * (config.score_noise_sd + 1.0);
  for (int b = 0; b < kScoreBins - 1; ++b) {
    const double target = static_cast<double>(b + 1) / kScoreBins;
    double lo = lo0;
    double hi = hi0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mixture_cdf(config, mid) >= target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    edges[b] = hi;
  }
  edges[kScoreBins - 1] = std::numeric_limits<double>::infinity();
  return edges;
}

std::pair<double, double> height_moments(const ScmConfig& config) {
  const int k = config.num_media();
  double mean = 0.0;
  double second = 0.0;
  for (int m = 0; m < k; ++m) {
    double pm = 0.0;
    for (const auto& row : config.media_given_score) pm += row[m] / kScoreBins;
    const auto& h = config.height_given_media[m];
    mean += pm * h.mean;
    second += pm * (h.sd * h.sd + h.mean * h.mean);
  }
  return {mean, std::sqrt(std::max(0.0, second - mean * mean))};
}

FeatureSchema simulator_schema(const ScmConfig& config) {
  return FeatureSchema({
      {std::string(kPosition), FeatureKind::kOrdinal, config.docs_per_query},
      {std::string(kMedia), FeatureKind::kCategorical, config.num_media()},
      {std::string(kHeight), FeatureKind::kContinuous, 0},
      {std::string(kMaxHeight), FeatureKind::kContinuous, 0},
  });
}

std::pair<ClickLog, GroundTruth> generate(const ScmConfig& config, int jobs) {
  config.validate();
  const auto edges = score_bin_edges(config);
  const auto [hmean, hsd] = height_moments(config);
  const int nq = config.n_queries;
  std::vector<QueryDraw> draws(static_cast<std::size_t>(nq));
  const int workers = std::clamp(jobs, 1, std::max(1, nq));
  auto run = [&](int w) {
    for (int q = w; q < nq; q += workers) draws[q] = generate_query(config, q, edges, hmean, hsd);
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  std::vector<ImpressionRecord> records;
  records.reserve(static_cast<std::size_t>(nq) * config.docs_per_query);
  for (auto& d : draws) {
    for (auto& r : d.records) records.push_back(std::move(r));
  }
  ClickLog log = group_queries(simulator_schema(config), std::move(records));

  GroundTruth truth;
  truth.graph = ground_truth_graph(config);
  truth.true_relevance.reserve(log.size());
  for (const auto& r : log.records()) truth.true_relevance.push_back(r.true_relevance);
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "click ~ Bernoulli(sigmoid(%.6g*r + %.6g/log2(rank+1) + d_media[m] + "
                "%.6g*height_z + %.6g))",
                config.click.relevance, config.click.position, config.click.height,
                config.click.bias);
  truth.click_model = buf;
  return {std::move(log), std::move(truth)};
}

CausalGraph ground_truth_graph(const ScmConfig& config) {
  CausalGraph g({std::string(kRel), std::string(kClick), std::string(kPosition),
                 std::string(kMedia), std::string(kHeight), std::string(kMaxHeight)});
  g.add_directed(kRel, kClick);
  g.add_directed(kRel, kPosition);
  if (!rows_identical(config.media_given_score)) g.add_directed(kRel, kMedia);
  if (!heights_identical(config.height_given_media)) g.add_directed(kMedia, kHeight);
  g.add_directed(kHeight, kMaxHeight);
  if (config.click.position != 0.0) g.add_directed(kPosition, kClick);
  if (!config.click.media.empty() && !all_equal(config.click.media)) {
    g.add_directed(kMedia, kClick);
  }
  if (config.click.height != 0.0) g.add_directed(kHeight, kClick);
  return g;
}

ClickLog assign_frequency_buckets(const ClickLog& log, int n_buckets) {
  if (n_buckets < 1 || n_buckets > kNumFrequencyBuckets) {
    throw ConfigError("n_buckets must lie in [1, 10]");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& r : log.records()) ++counts[r.query_id];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::map<std::string, int> bucket;
  const std::size_t nq = ranked.size();
  for (std::size_t i = 0; i < nq; ++i) {
    bucket[ranked[i].first] = static_cast<int>(i * static_cast<std::size_t>(n_buckets) / nq);
  }
  std::vector<ImpressionRecord> records = log.records();
  for (auto& r : records) r.freq_bucket = bucket.at(r.query_id);
  return group_queries(log.schema(), std::move(records));
}

// ---------------------------------------------------------------------------
// JSON

ScmConfig scm_config_from_json(const Json& j) {
  const std::string ctx = "scm";
  if (!j.is_object()) throw ConfigError("scm: expected an object");
  ScmConfig c = ScmConfig::default_biased();
  if (!j.contains("seed")) throw ConfigError("scm.seed: missing");
  c.seed = json_require<std::uint64_t>(j, "seed", ctx);
  c.n_queries = json_get<int>(j, "n_queries", ctx, c.n_queries);
  c.docs_per_query = json_get<int>(j, "docs_per_query", ctx, c.docs_per_query);
  if (j.contains("relevance_prior")) {
    const auto v = json_require<std::vector<double>>(j, "relevance_prior", ctx);
    if (v.size() != c.relevance_prior.size()) {
      throw ConfigError("scm.relevance_prior: expected 5 probabilities");
    }
    std::copy(v.begin(), v.end(), c.relevance_prior.begin());
  }
  c.score_noise_sd = json_get<double>(j, "score_noise_sd", ctx, c.score_noise_sd);
  c.rank_noise_sd = json_get<double>(j, "rank_noise_sd", ctx, c.rank_noise_sd);
  c.media_given_score = json_get<std::vector<std::vector<double>>>(
      j, "media_given_score", ctx, c.media_given_score);
  if (j.contains("height_given_media")) {
    c.height_given_media.clear();
    for (const auto& h : j.at("height_given_media")) {
      c.height_given_media.push_back({json_require<double>(h, "mean", ctx + ".height_given_media"),
                                      json_require<double>(h, "sd", ctx + ".height_given_media")});
    }
  }
  if (j.contains("click_coeffs")) {
    const auto& cc = j.at("click_coeffs");
    const std::string cctx = ctx + ".click_coeffs";
    c.click.relevance = json_get<double>(cc, "a_rel", cctx, c.click.relevance);
    c.click.position = json_get<double>(cc, "b_pos", cctx, c.click.position);
    c.click.media = json_get<std::vector<double>>(cc, "d_media", cctx, c.click.media);
    c.click.height = json_get<double>(cc, "e_height", cctx, c.click.height);
    c.click.bias = json_get<double>(cc, "b0", cctx, c.click.bias);
  }
  if (j.contains("doc_features")) {
    const auto& df = j.at("doc_features");
    const std::string dctx = ctx + ".doc_features";
    c.doc_features.dim = json_get<int>(df, "dim", dctx, c.doc_features.dim);
    c.doc_features.relevance_noise_sd =
        json_get<double>(df, "relevance_noise_sd", dctx, c.doc_features.relevance_noise_sd);
    c.doc_features.score_leak = json_get<double>(df, "score_leak", dctx, c.doc_features.score_leak);
  }
  if (j.contains("max_height_mode")) {
    const auto mode = json_require<std::string>(j, "max_height_mode", ctx);
    if (mode == "running") {
      c.max_height_mode = MaxHeightMode::kRunning;
    } else if (mode == "page") {
      c.max_height_mode = MaxHeightMode::kPage;
    } else {
      throw ConfigError("scm.max_height_mode: expected 'running' or 'page'");
    }
  }
  c.validate();
  return c;
}

Json scm_config_to_json(const ScmConfig& c) {
  Json heights = Json::array();
  for (const auto& h : c.height_given_media) heights.push_back({{"mean", h.mean}, {"sd", h.sd}});
  return Json{
      {"seed", c.seed},
      {"n_queries", c.n_queries},
      {"docs_per_query", c.docs_per_query},
      {"relevance_prior", std::vector<double>(c.relevance_prior.begin(), c.relevance_prior.end())},
      {"score_noise_sd", c.score_noise_sd},
      {"rank_noise_sd", c.rank_noise_sd},
      {"media_given_score", c.media_given_score},
      {"height_given_media", heights},
      {"click_coeffs",
       {{"a_rel", c.click.relevance},
        {"b_pos", c.click.position},
        {"d_media", c.click.media},
        {"e_height", c.click.height},
        {"b0", c.click.bias}}},
      {"doc_features",
       {{"dim", c.doc_features.dim},
        {"relevance_noise_sd", c.doc_features.relevance_noise_sd},
        {"score_leak", c.doc_features.score_leak}}},
      {"max_height_mode", c.max_height_mode == MaxHeightMode::kRunning ? "running" : "page"},
  };
}

}  // namespace wpultr
