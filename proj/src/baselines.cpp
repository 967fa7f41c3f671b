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

#include "wpultr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wpultr/special_functions.hpp"

namespace wpultr {

RankingModel::RankingModel(const ClickLog& log, const RankerHyper& hyper) {
  const Eigen::Index dim = log.doc_feature_dim();
  if (dim <= 0) throw SchemaError("ranking model needs doc_features");
  mean_ = Eigen::VectorXd::Zero(dim);
  sd_ = Eigen::VectorXd::Ones(dim);
  if (!log.empty()) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
    for (const auto& r : log.records()) {
      sum += r.doc_features;
      sq += r.doc_features.cwiseAbs2();
    }
    const double n = static_cast<double>(log.size());
    mean_ = sum / n;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double var = sq(j) / n - mean_(j) * mean_(j);
      sd_(j) = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
  }
  std::vector<int> sizes{static_cast<int>(dim)};
  sizes.insert(sizes.end(), hyper.hidden.begin(), hyper.hidden.end());
  sizes.push_back(1);
  Rng rng = make_rng(hyper.seed, 0x4a4b);
  net_ = Mlp<double>(sizes, rng);
}

Eigen::MatrixXd RankingModel::inputs(const ClickLog& log,
                                     const std::vector<std::size_t>* rows) const {
  const std::size_t n = rows ? rows->size() : log.size();
  Eigen::MatrixXd x(input_dim(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = log[rows ? (*rows)[i] : i];
    if (r.doc_features.size() != input_dim()) {
      throw SchemaError("doc_features width does not match the ranking model");
    }
    x.col(static_cast<Eigen::Index>(i)) = (r.doc_features - mean_).cwiseQuotient(sd_);
  }
  return x;
}

Eigen::VectorXd RankingModel::score(const Eigen::MatrixXd& inputs,
                                    Mlp<double>::Cache* cache) const {
  return net_.forward(inputs, cache).row(0).transpose();
}

Eigen::VectorXd RankingModel::scores(const ClickLog& log) const { return score(inputs(log)); }

Json ranker_to_json(const RankingModel& m) {
  return Json{{"input_mean", vector_to_json(m.mean_)},
              {"input_sd", vector_to_json(m.sd_)},
              {"net", mlp_to_json(m.net_)}};
}

RankingModel ranker_from_json(const Json& j) {
  RankingModel m;
  m.mean_ = vector_from_json(j.at("input_mean"));
  m.sd_ = vector_from_json(j.at("input_sd"));
  m.net_ = mlp_from_json(j.at("net"));
  if (m.net_.inputs() != m.mean_.size()) throw ConfigError("ranker: input width mismatch");
  return m;
}

BatchSampler::BatchSampler(std::size_t n, int batch_size, std::uint64_t seed)
    : n_(n), batch_(static_cast<std::size_t>(std::max(1, batch_size))), rng_(make_rng(seed, 0xba7c)) {
  if (n_ == 0) throw std::invalid_argument("BatchSampler: empty data");
  batch_ = std::min(batch_, n_);
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  out.reserve(batch_);
  while (out.size() < batch_) {
    if (at_ >= order_.size()) {
      order_ = permutation(n_, rng_);
      at_ = 0;
    }
    out.push_back(order_[at_++]);
  }
  return out;
}

double pointwise_loss(const RankingModel& model, const Eigen::MatrixXd& inputs,
                      const Eigen::VectorXd& labels, const Eigen::VectorXd& weights,
                      Eigen::VectorXd* grad) {
  Mlp<double>::Cache cache;
  const Eigen::VectorXd s = model.score(inputs, &cache);
  const Eigen::Index n = s.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  Eigen::MatrixXd g(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = labels(i);
    loss -= weights(i) * (y * log_sigmoid(s(i)) + (1.0 - y) * log_sigmoid(-s(i)));
    g(0, i) = weights(i) * (sigmoid(s(i)) - y) * inv_n;
  }
  if (grad) {
    std::vector<Mlp<double>::Layer> layers;
    model.net().backward(cache, g, &layers);
    *grad = Mlp<double>::pack(layers);
  }
  return loss * inv_n;
}

RankingModel train_pointwise(const ClickLog& log, const Eigen::VectorXd& labels,
                             const Eigen::VectorXd& weights, RankingModel model, int steps,
                             const RankerHyper& hyper, std::vector<double>* loss_trace) {
  if (steps <= 0 || log.empty()) return model;
  BatchSampler sampler(log.size(), hyper.batch_size, hyper.seed);
  Adam<double> opt(hyper.learning_rate);
  Eigen::VectorXd theta = model.net().flat();
  Eigen::VectorXd grad;
  for (int step = 0; step < steps; ++step) {
    const auto rows = sampler.next();
    const Eigen::MatrixXd x = model.inputs(log, &rows);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    Eigen::VectorXd w(y.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = labels(static_cast<Eigen::Index>(rows[i]));
      w(static_cast<Eigen::Index>(i)) = weights(static_cast<Eigen::Index>(rows[i]));
    }
    const double loss = pointwise_loss(model, x, y, w, &grad);
    if (loss_trace) loss_trace->push_back(loss);
    opt.step(theta, grad);
    model.net().set_flat(theta);
  }
  return model;
}

namespace {

Eigen::VectorXd click_labels(const ClickLog& log) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(log.size()));
  for (std::size_t i = 0; i < log.size(); ++i) y(static_cast<Eigen::Index>(i)) = log[i].click;
  return y;
}

}  // namespace

RankingModel train_naive(const ClickLog& log, const RankerHyper& hyper,
                         std::vector<double>* loss_trace) {
  RankingModel model(log, hyper);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(log.size()));
  return train_pointwise(log, click_labels(log), w, std::move(model), hyper.steps, hyper,
                         loss_trace);
}

double PropensityTable::at(int position) const {
  if (position < 1 || position > static_cast<int>(propensity.size())) {
    throw std::out_of_range("no propensity for position " + std::to_string(position));
  }
  return propensity[static_cast<std::size_t>(position - 1)];
}

std::vector<double> isotonic_nonincreasing(const std::vector<double>& values,
                                           const std::vector<double>& weights) {
  if (values.size() != weights.size()) {
    throw std::invalid_argument("isotonic_nonincreasing: length mismatch");
  }
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean < blocks.back().mean) {
      const Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double w = a.weight + b.weight;
      a.mean = w > 0 ? (a.mean * a.weight + b.mean * b.weight) / w : 0.5 * (a.mean + b.mean);
      a.weight = w;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean);
  return out;
}

PropensityTable estimate_propensity(const ClickLog& log) {
  int max_pos = 0;
  for (const auto& r : log.records()) max_pos = std::max(max_pos, r.rank_position);
  if (max_pos == 0) throw std::invalid_argument("estimate_propensity: empty log");
  std::vector<double> shown(static_cast<std::size_t>(max_pos), 0.0);
  std::vector<double> clicks(static_cast<std::size_t>(max_pos), 0.0);
  for (const auto& r : log.records()) {
    shown[static_cast<std::size_t>(r.rank_position - 1)] += 1.0;
    clicks[static_cast<std::size_t>(r.rank_position - 1)] += r.click;
  }
  for (int k = 0; k < max_pos; ++k) {
    if (shown[static_cast<std::size_t>(k)] == 0) {
      throw std::invalid_argument("estimate_propensity: position " + std::to_string(k + 1) +
                                  " never shown");
    }
  }
  const double ctr1 = clicks[0] / shown[0];
  if (ctr1 <= 0) throw std::invalid_argument("estimate_propensity: CTR at position 1 is zero");
  std::vector<double> ratio(static_cast<std::size_t>(max_pos));
  for (std::size_t k = 0; k < ratio.size(); ++k) ratio[k] = clicks[k] / shown[k] / ctr1;
  auto iso = isotonic_nonincreasing(ratio, shown);
  const double top = iso[0];
  PropensityTable t;
  for (double v : iso) t.propensity.push_back(std::clamp(v / top, 0.01, 1.0));
  return t;
}

RankingModel train_ipw(const ClickLog& log, const PropensityTable& propensity,
                       const RankerHyper& hyper, std::vector<double>* loss_trace) {
  RankingModel model(log, hyper);
  Eigen::VectorXd w(static_cast<Eigen::Index>(log.size()));
  for (std::size_t i = 0; i < log.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) =
        log[i].click ? 1.0 / propensity.at(log[i].rank_position) : 1.0;
  }
  return train_pointwise(log, click_labels(log), w, std::move(model), hyper.steps, hyper,
                         loss_trace);
}

}  // namespace wpultr
