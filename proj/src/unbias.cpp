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

#include "wpultr/unbias.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "wpultr/special_functions.hpp"

namespace wpultr {

WeightVector normalize_weights(Eigen::VectorXd raw, double clip_low, double clip_high) {
  if (raw.size() == 0) throw std::invalid_argument("normalize_weights: empty weight vector");
  if (!(clip_low > 0) || clip_low > 1.0 || clip_high < 1.0) {
    throw std::invalid_argument("normalize_weights: need 0 < low <= 1 <= high");
  }
  WeightVector w;
  w.clip_low = clip_low;
  w.clip_high = clip_high;
  Eigen::Index clipped = 0;
  Eigen::VectorXd c(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (raw(i) < clip_low || raw(i) > clip_high || !std::isfinite(raw(i))) ++clipped;
    c(i) = std::isnan(raw(i)) ? 1.0 : std::clamp(raw(i), clip_low, clip_high);
  }
  w.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(raw.size());
  w.normalized = c / c.mean();
  w.raw = std::move(raw);
  return w;
}

namespace {

Eigen::Index rel_column(const ConditionalEstimator& est) {
  return est.layout().node(kRel).begin;
}

bool has_parent(const ConditionalEstimator& est, std::string_view label) {
  const auto& p = est.parents();
  return std::find(p.begin(), p.end(), label) != p.end();
}

Eigen::VectorXd standardized(const Eigen::VectorXd& s, double* sd_out) {
  const double mean = s.mean();
  double sd = std::sqrt((s.array() - mean).square().mean());
  if (!(sd > 1e-12)) sd = 1.0;
  if (sd_out) *sd_out = sd;
  return (s.array() - mean) / sd;
}

double log_mean_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().mean());
}

}  // namespace

WeightVector weight_case1(const ConditionalEstimator& est, const Eigen::MatrixXd& rows,
                          const Eigen::VectorXd& targets, double clip_low, double clip_high) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw std::invalid_argument("weight_case1: batch needs at least 2 rows");
  if (est.parents().size() != 1 || est.parents()[0] != kRel) {
    throw std::invalid_argument("weight_case1: estimator parents must be exactly {REL}");
  }
  const Eigen::VectorXd log_den = est.log_prob(rows, targets);
  // With REL the only parent, column j of the outputs is p(. | r_hat_j).
  const Eigen::MatrixXd out = est.outputs(rows);
  Eigen::VectorXd raw(n);
  Eigen::VectorXd lp(n);
  static const double kHalfLog2Pi = 0.5 * std::log(2.0 * M_PI);
  Eigen::MatrixXd logp;
  if (est.head() != HeadKind::kGaussian) logp = est.probabilities(rows).array().log();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (est.head() == HeadKind::kGaussian) {
        const double zs = (targets(i) - out(0, j)) * std::exp(-out(1, j));
        lp(j) = -0.5 * zs * zs - out(1, j) - kHalfLog2Pi;
      } else {
        lp(j) = logp(static_cast<Eigen::Index>(targets(i)), j);
      }
    }
    raw(i) = std::exp(log_mean_exp(lp) - log_den(i));
  }
  return normalize_weights(std::move(raw), clip_low, clip_high);
}

WeightVector weight_case2(const ConditionalEstimator& est, const Eigen::MatrixXd& rows,
                          const Eigen::VectorXd& targets, double clip_low, double clip_high) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw std::invalid_argument("weight_case2: batch needs at least 2 rows");
  if (!has_parent(est, kRel)) throw std::invalid_argument("weight_case2: REL must be a parent");
  if (est.parents().size() < 2) {
    throw std::invalid_argument("weight_case2: no other parents; use weight_case1");
  }
  const Eigen::Index rel = rel_column(est);
  const Eigen::VectorXd log_den = est.log_prob(rows, targets);
  Eigen::VectorXd raw(n);
  Eigen::MatrixXd swapped(n, rows.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    swapped = rows.row(i).replicate(n, 1);
    swapped.col(rel) = rows.col(rel);
    const Eigen::VectorXd lp = est.log_prob(swapped, Eigen::VectorXd::Constant(n, targets(i)));
    raw(i) = std::exp(log_mean_exp(lp) - log_den(i));
  }
  return normalize_weights(std::move(raw), clip_low, clip_high);
}

WeightVector total_weight(const std::vector<WeightVector>& parts, Eigen::Index n,
                          double clip_low, double clip_high) {
  Eigen::VectorXd raw = Eigen::VectorXd::Ones(n);
  for (const auto& p : parts) {
    if (p.raw.size() != n) throw std::invalid_argument("total_weight: length mismatch");
    raw.array() *= p.raw.array();
  }
  return normalize_weights(std::move(raw), clip_low, clip_high);
}

ClickLoss reweighted_click_loss(const ConditionalEstimator& click_head, const Eigen::MatrixXd& rows,
                                const Eigen::VectorXd& clicks, const Eigen::VectorXd& weights) {
  if (click_head.head() != HeadKind::kBernoulli) {
    throw std::invalid_argument("reweighted_click_loss: click head must be bernoulli");
  }
  ClickLoss out;
  Eigen::MatrixXd input_grad;
  out.loss = -click_head.weighted_loglik(rows, clicks, &weights, &out.param_grad, &input_grad);
  out.param_grad = -out.param_grad;
  out.score_grad = -input_grad.col(rel_column(click_head));
  return out;
}

Eigen::MatrixXd blocked_rows(const Eigen::MatrixXd& rows, const ColumnLayout& layout) {
  const Eigen::Index rel = layout.node(kRel).begin;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.rows(), rows.cols());
  out.col(rel) = rows.col(rel);
  return out;
}

Eigen::VectorXd blocked_gradient(const RankingModel& ranker, const Eigen::MatrixXd& ranker_inputs,
                                 const ConditionalEstimator& click_head,
                                 const Eigen::MatrixXd& rows, const Eigen::VectorXd& clicks,
                                 const Eigen::VectorXd& weights, const Eigen::MatrixXd& reference) {
  if (!has_parent(click_head, kRel)) {
    throw ConfigError("blocked update: click head has no REL parent");
  }
  if (click_head.head() != HeadKind::kBernoulli) {
    throw std::invalid_argument("blocked update: click head must be bernoulli");
  }
  const Eigen::Index cols = click_head.layout().cols();
  const Eigen::MatrixXd ref =
      reference.rows() > 0 ? reference : Eigen::MatrixXd::Zero(1, cols);
  if (ref.cols() != cols || rows.cols() != cols) {
    throw std::invalid_argument("blocked update: row width does not match the click head");
  }
  const Eigen::Index rel = rel_column(click_head);
  const Eigen::Index b = rows.rows();
  const Eigen::Index m = ref.rows();
  if (b < 2) throw std::invalid_argument("blocked update: batch needs at least 2 rows");

  Mlp<double>::Cache rank_cache;
  const Eigen::VectorXd raw_s = ranker.score(ranker_inputs, &rank_cache);
  double sd_s = 1.0;
  const Eigen::VectorXd s = standardized(raw_s, &sd_s);
  // Column i*m+k pairs score i with reference row k.
  Eigen::MatrixXd x(cols, b * m);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      x.col(i * m + k) = ref.row(k).transpose();
      x(rel, i * m + k) = s(i);
    }
  }
  Mlp<double>::Cache head_cache;
  const Eigen::MatrixXd logit = click_head.net().forward(x, &head_cache);
  Eigen::MatrixXd dlogit(1, b * m);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (Eigen::Index i = 0; i < b; ++i) {
    double p = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) p += sigmoid(logit(0, i * m + k));
    p = std::clamp(p * inv_m, 1e-12, 1.0 - 1e-12);
    // d/dp of -w log p(c) / b
    const double dp = -weights(i) / static_cast<double>(b) *
                      (clicks(i) > 0.5 ? 1.0 / p : -1.0 / (1.0 - p));
    for (Eigen::Index k = 0; k < m; ++k) {
      const double q = sigmoid(logit(0, i * m + k));
      dlogit(0, i * m + k) = dp * q * (1.0 - q) * inv_m;
    }
  }
  const Eigen::MatrixXd dx = click_head.net().backward(head_cache, dlogit, nullptr);
  Eigen::RowVectorXd ds = Eigen::RowVectorXd::Zero(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) ds(i) += dx(rel, i * m + k);
  }
  {
    // Back through the standardization: (I - 11'/b - s s'/b) / sd.
    const double mean_g = ds.mean();
    const double proj = ds.dot(s.transpose()) / static_cast<double>(b);
    ds = ((ds.array() - mean_g) - proj * s.transpose().array()) / sd_s;
  }
  std::vector<Mlp<double>::Layer> layers;
  ranker.net().backward(rank_cache, ds, &layers);
  return Mlp<double>::pack(layers);
}

void blocked_update(RankingModel& ranker, const Eigen::MatrixXd& ranker_inputs,
                    const ConditionalEstimator& click_head, const Eigen::MatrixXd& rows,
                    const Eigen::VectorXd& clicks, const Eigen::VectorXd& weights, double lr,
                    const Eigen::MatrixXd& reference) {
  const Eigen::VectorXd g =
      blocked_gradient(ranker, ranker_inputs, click_head, rows, clicks, weights, reference);
  ranker.net().set_flat(ranker.net().flat() - lr * g);
}

void BalConfig::validate() const {
  if (steps < 0) throw ConfigError("unbias.steps: must be >= 0");
  if (batch_size < 2) throw ConfigError("unbias.batch_size: must be >= 2");
  if (discovery_period < 1) throw ConfigError("unbias.discovery_period: must be >= 1");
  if (discovery_sample < 20) throw ConfigError("unbias.discovery_sample: must be >= 20");
  if (reference_rows < 1) throw ConfigError("unbias.reference_rows: must be >= 1");
  if (!(clip_low > 0) || clip_low > 1.0 || clip_high < 1.0) {
    throw ConfigError("unbias.clip: need 0 < low <= 1 <= high");
  }
  if (warm_fraction < 0 || warm_fraction > 1) {
    throw ConfigError("unbias.warm_fraction: must lie in [0, 1]");
  }
  if (graph_source == GraphSource::kFixed && !fixed_graph) {
    throw ConfigError("unbias: fixed graph source without a graph");
  }
}

namespace {

struct Influence {
  ConditionalEstimator est;
  bool case2 = false;
};

class BalTrainer {
 public:
  BalTrainer(const ClickLog& log, const BalConfig& config) : log_(log), cfg_(config) {}

  BalRun run() {
    cfg_.validate();
    BalRun out;
    out.transforms = fit_transforms(log_, cfg_.transform);
    const auto n = static_cast<Eigen::Index>(log_.size());
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    z_ = transform_log(log_, out.transforms, &zero);
    rel_ = z_.layout.node(kRel).begin;
    clicks_ = z_.codes.at(std::string(kClick)).cast<double>();

    const bool scored = std::all_of(log_.records().begin(), log_.records().end(),
                                    [](const ImpressionRecord& r) { return r.logged_score.has_value(); });
    if (cfg_.confounder == ConfounderScore::kLogged) {
      if (scored) {
        logged_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) logged_(i) = *log_[static_cast<std::size_t>(i)].logged_score;
      } else {
        out.conflicts.push_back("log has no logged scores; confounder falls back to ranker scores");
      }
    }

    allowed_ = {std::string(kClick), std::string(kRel)};
    const auto names = log_.schema().names();
    if (cfg_.sepp_nodes.empty()) {
      allowed_.insert(allowed_.end(), names.begin(), names.end());
    } else {
      for (const auto& s : cfg_.sepp_nodes) {
        if (!log_.schema().index_of(s)) throw ConfigError("unbias.sepp_nodes: unknown feature " + s);
        allowed_.push_back(s);
      }
    }

    RankerHyper rh = cfg_.ranker;
    rh.seed = mix_seed(cfg_.seed, 1);
    rh.batch_size = cfg_.batch_size;
    const int warm = static_cast<int>(std::lround(cfg_.warm_fraction * cfg_.steps));
    std::vector<double> trace;
    ranker_ = train_pointwise(log_, clicks_, Eigen::VectorXd::Ones(n), RankingModel(log_, rh), warm,
                              rh, &trace);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      out_losses_.push_back({static_cast<int>(i), "warm", trace[i]});
    }

    if (warm < cfg_.steps) {
      BatchSampler sampler(log_.size(), cfg_.batch_size, mix_seed(cfg_.seed, 2));
      Adam<double> adam_rank(cfg_.lr_rank);
      Eigen::VectorXd theta = ranker_.net().flat();
      int refresh = 0;
      for (int step = warm; step < cfg_.steps; ++step) {
        if ((step - warm) % cfg_.discovery_period == 0) refresh_graph(step, refresh++, out);
        train_step(step, sampler, adam_rank, theta);
      }
    } else {
      click_head_ = ConditionalEstimator(std::string(kClick), {std::string(kRel)},
                                         HeadKind::kBernoulli, z_.layout, cfg_.density);
    }
    out.final_weights = full_weights();
    out.ranker = std::move(ranker_);
    out.click_head = std::move(click_head_);
    out.weight_stats = std::move(stats_);
    out.losses = std::move(out_losses_);
    return out;
  }

 private:
  void refresh_graph(int step, int index, BalRun& out) {
    set_confounder_scores();
    CausalGraph graph;
    if (cfg_.graph_source == GraphSource::kFixed) {
      graph = *cfg_.fixed_graph;
    } else {
      Rng rng = make_rng(cfg_.seed, 100 + static_cast<std::uint64_t>(index));
      const auto rows = subsample_indices(log_.size(),
                                          static_cast<std::size_t>(cfg_.discovery_sample), rng);
      PcOptions pc = cfg_.discovery;
      pc.kci.seed = mix_seed(cfg_.seed, 200 + static_cast<std::uint64_t>(index));
      const NodeData data = restrict_nodes(node_data(z_.select_rows(rows)), allowed_);
      DiscoveryResult d = discover(data, pc, false);
      for (const auto& c : d.conflicts) {
        out.conflicts.push_back("step " + std::to_string(step) + ": " + c);
      }
      graph = std::move(d.graph);
    }
    out.snapshots.push_back({step, graph});

    Rng ref_rng = make_rng(cfg_.seed, 500 + static_cast<std::uint64_t>(index));
    const auto ref_rows = subsample_indices(log_.size(),
                                            static_cast<std::size_t>(cfg_.reference_rows), ref_rng);
    reference_ = z_.select_rows(ref_rows).values;

    influences_.clear();
    const BiasClasses biases = classify_biases(graph);
    for (const auto& x : biases.confounding) {
      DensityHyper h = cfg_.density;
      h.max_epochs = cfg_.refit_epochs;
      h.seed = mix_seed(cfg_.seed, 300 + static_cast<std::uint64_t>(index));
      const auto parents = graph.parents(x);
      auto fitted = fit(z_, x, parents, default_head(z_.layout.node(x).kind), h);
      influences_.push_back({std::move(fitted.first), parents.size() > 1});
    }

    const auto click_parents = graph.parents(kClick);
    if (std::find(click_parents.begin(), click_parents.end(), kRel) == click_parents.end()) {
      throw ConfigError("unbias: graph has no REL -> CLICK edge");
    }
    if (!have_click_head_ || click_parents != click_head_.parents()) {
      DensityHyper h = cfg_.density;
      h.seed = mix_seed(cfg_.seed, 400 + static_cast<std::uint64_t>(index));
      click_head_ = ConditionalEstimator(std::string(kClick), click_parents, HeadKind::kBernoulli,
                                         z_.layout, h);
      initialize_to_marginal(click_head_, clicks_);
      adam_click_ = Adam<double>(cfg_.lr_click);
      phi_ = click_head_.net().flat();
      have_click_head_ = true;
    }
  }

  void train_step(int step, BatchSampler& sampler, Adam<double>& adam_rank, Eigen::VectorXd& theta) {
    const auto rows = sampler.next();
    const auto b = static_cast<Eigen::Index>(rows.size());
    const Eigen::MatrixXd x = ranker_.inputs(log_, &rows);
    const Eigen::VectorXd s = ranker_.score(x);
    Eigen::MatrixXd zb(b, z_.values.cols());
    Eigen::VectorXd cb(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      zb.row(i) = z_.values.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
      cb(i) = clicks_(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
    }
    // Weights condition on the confounder score; the click head sees the
    // ranker's batch-standardized score.
    Eigen::MatrixXd zw = zb;
    if (logged_.size() == 0) zw.col(rel_) = s;
    zb.col(rel_) = standardized(s, nullptr);

    std::vector<WeightVector> parts;
    for (const auto& inf : influences_) {
      const Eigen::VectorXd y = target_values(inf.est, rows);
      parts.push_back(inf.case2 ? weight_case2(inf.est, zw, y, cfg_.clip_low, cfg_.clip_high)
                                : weight_case1(inf.est, zw, y, cfg_.clip_low, cfg_.clip_high));
    }
    const WeightVector w = total_weight(parts, b, cfg_.clip_low, cfg_.clip_high);
    WeightStats ws;
    ws.step = step;
    ws.mean = w.normalized.mean();
    ws.sd = std::sqrt((w.normalized.array() - ws.mean).square().mean());
    ws.min = w.normalized.minCoeff();
    ws.max = w.normalized.maxCoeff();
    ws.clipped_fraction = w.clipped_fraction;
    stats_.push_back(ws);

    const ClickLoss cl = reweighted_click_loss(click_head_, zb, cb, w.normalized);
    adam_click_.step(phi_, cl.param_grad);
    click_head_.net().set_flat(phi_);

    const Eigen::VectorXd g =
        blocked_gradient(ranker_, x, click_head_, zb, cb, w.normalized, reference_);
    adam_rank.step(theta, g);
    ranker_.net().set_flat(theta);
    out_losses_.push_back({step, "bal", cl.loss});
  }

  // REL column used by discovery, influence estimators and weights.
  void set_confounder_scores() {
    z_.set_scores(logged_.size() ? logged_ : ranker_.scores(log_));
  }

  Eigen::VectorXd full_weights() {
    const auto n = static_cast<Eigen::Index>(log_.size());
    if (influences_.empty()) return Eigen::VectorXd::Ones(n);
    set_confounder_scores();
    Eigen::VectorXd raw(n);
    const auto chunk = static_cast<Eigen::Index>(cfg_.batch_size);
    // Chunks are drawn like training batches. Consecutive records share a
    // handful of queries, which would starve the case-2 marginalization.
    Rng rng = make_rng(cfg_.seed, 900);
    const auto order = permutation(log_.size(), rng);
    for (Eigen::Index lo = 0; lo < n;) {
      Eigen::Index hi = std::min(n, lo + chunk);
      if (n - hi < 2) hi = n;  // no 1-row tail
      std::vector<std::size_t> rows;
      for (Eigen::Index i = lo; i < hi; ++i) rows.push_back(order[static_cast<std::size_t>(i)]);
      const Eigen::MatrixXd zb = z_.select_rows(rows).values;
      std::vector<WeightVector> parts;
      for (const auto& inf : influences_) {
        const Eigen::VectorXd y = target_values(inf.est, rows);
        parts.push_back(inf.case2 ? weight_case2(inf.est, zb, y, cfg_.clip_low, cfg_.clip_high)
                                  : weight_case1(inf.est, zb, y, cfg_.clip_low, cfg_.clip_high));
      }
      Eigen::VectorXd r = Eigen::VectorXd::Ones(hi - lo);
      for (const auto& part : parts) r.array() *= part.raw.array();
      for (Eigen::Index i = lo; i < hi; ++i) {
        raw(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i - lo)])) = r(i - lo);
      }
      lo = hi;
    }
    return normalize_weights(std::move(raw), cfg_.clip_low, cfg_.clip_high).normalized;
  }

  Eigen::VectorXd target_values(const ConditionalEstimator& est,
                                const std::vector<std::size_t>& rows) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    if (est.head() == HeadKind::kGaussian) {
      const Eigen::Index col = z_.layout.node(est.target()).begin;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = z_.values(static_cast<Eigen::Index>(rows[i]), col);
      }
    } else {
      const auto& codes = z_.codes.at(est.target());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = codes(static_cast<Eigen::Index>(rows[i]));
      }
    }
    return y;
  }

  const ClickLog& log_;
  BalConfig cfg_;
  DesignMatrix z_;
  Eigen::Index rel_ = 1;
  Eigen::VectorXd clicks_;
  std::vector<std::string> allowed_;
  RankingModel ranker_;
  ConditionalEstimator click_head_;
  bool have_click_head_ = false;
  Adam<double> adam_click_;
  Eigen::VectorXd phi_;
  std::vector<Influence> influences_;
  Eigen::MatrixXd reference_;
  Eigen::VectorXd logged_;  // empty unless the logged score is the confounder
  std::vector<WeightStats> stats_;
  std::vector<LossPoint> out_losses_;
};

}  // namespace

BalRun train_bal(const ClickLog& log, const BalConfig& config) {
  if (log.empty()) throw std::invalid_argument("train_bal: empty log");
  return BalTrainer(log, config).run();
}

BalConfig bal_variant(const std::string& method, const FeatureSchema& schema, BalConfig base,
                      const std::string& position_feature, const std::string& media_feature) {
  auto need = [&](const std::string& f) {
    if (!schema.index_of(f)) throw ConfigError("train." + method + ": log has no feature '" + f + "'");
  };
  const std::string rel(kRel);
  const std::string click(kClick);
  if (method == "bal") {
    base.graph_source = GraphSource::kDiscover;
  } else if (method == "bal-pos" || method == "bal-mm") {
    const std::string& f = method == "bal-pos" ? position_feature : media_feature;
    need(f);
    base.graph_source = GraphSource::kDiscover;
    base.sepp_nodes = {f};
  } else if (method == "pb-bal") {
    need(position_feature);
    CausalGraph g({click, rel, position_feature});
    g.add_directed(rel, position_feature);
    g.add_directed(position_feature, click);
    g.add_directed(rel, click);
    base.graph_source = GraphSource::kFixed;
    base.fixed_graph = std::move(g);
    base.sepp_nodes = {position_feature};
  } else if (method == "fb-bal") {
    std::vector<std::string> nodes{click, rel};
    for (const auto& n : schema.names()) nodes.push_back(n);
    CausalGraph g(nodes);
    g.add_directed(rel, click);
    for (const auto& n : schema.names()) {
      g.add_directed(rel, n);
      g.add_directed(n, click);
    }
    base.graph_source = GraphSource::kFixed;
    base.fixed_graph = std::move(g);
    base.sepp_nodes.clear();
  } else {
    throw ConfigError("train.method: unknown BAL variant '" + method + "'");
  }
  return base;
}

void write_bal_artifacts(const BalRun& run, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  const std::string snap = (root / "graph_snapshots.ndjson").string();
  fs::remove(snap);
  for (const auto& s : run.snapshots) append_snapshot(snap, s);
  if (run.snapshots.empty()) write_text_file(snap, "");

  std::string ws = "step,mean,sd,min,max,clipped_fraction\n";
  char buf[256];
  for (const auto& s : run.weight_stats) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.step, s.mean, s.sd, s.min,
                  s.max, s.clipped_fraction);
    ws += buf;
  }
  write_text_file(root / "weights_stats.csv", ws);

  std::string loss = "step,phase,loss\n";
  for (const auto& l : run.losses) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.9g\n", l.step, l.phase.c_str(), l.loss);
    loss += buf;
  }
  write_text_file(root / "loss.csv", loss);
  write_json_file(root / "ranker.json", ranker_to_json(run.ranker));
  write_json_file(root / "click_head.json", estimator_to_json(run.click_head));
  write_json_file(root / "transforms.json", transforms_to_json(run.transforms));
}

}  // namespace wpultr
