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

#ifndef WPULTR_BASELINES_HPP_
#define WPULTR_BASELINES_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "wpultr/core.hpp"
#include "wpultr/json_io.hpp"
#include "wpultr/nn.hpp"

namespace wpultr {

struct RankerHyper {
  std::vector<int> hidden{64, 64};
  double learning_rate = 1e-3;
  int batch_size = 256;
  int steps = 2000;
  std::uint64_t seed = 0;
};

// Feed-forward scorer f(q, d; theta) over standardized doc features.
class RankingModel {
 public:
  RankingModel() = default;
  // Input scaling is fitted on `log`; weights are drawn from the seed.
  RankingModel(const ClickLog& log, const RankerHyper& hyper);

  Eigen::Index input_dim() const { return mean_.size(); }
  const Mlp<double>& net() const { return net_; }
  Mlp<double>& net() { return net_; }

  // Standardized features, (dim x rows.size()); all records when rows is
  // null.
  Eigen::MatrixXd inputs(const ClickLog& log, const std::vector<std::size_t>* rows = nullptr) const;
  Eigen::VectorXd score(const Eigen::MatrixXd& inputs, Mlp<double>::Cache* cache = nullptr) const;
  Eigen::VectorXd scores(const ClickLog& log) const;

  friend Json ranker_to_json(const RankingModel& m);
  friend RankingModel ranker_from_json(const Json& j);

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd sd_;
  Mlp<double> net_;
};

Json ranker_to_json(const RankingModel& m);
RankingModel ranker_from_json(const Json& j);

// Batch order shared by every pointwise trainer: consecutive permutations
// of the record indices drawn from one stream.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, int batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::size_t n_;
  std::size_t batch_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t at_ = 0;
};

// Mean over the batch of weight * BCE(sigmoid(f), label). Returns the loss
// and, when requested, its gradient with respect to the flat parameters.
double pointwise_loss(const RankingModel& model, const Eigen::MatrixXd& inputs,
                      const Eigen::VectorXd& labels, const Eigen::VectorXd& weights,
                      Eigen::VectorXd* grad);

// Runs `steps` Adam steps of the weighted pointwise loss starting from
// `model`. `loss_trace`, when given, receives one entry per step.
RankingModel train_pointwise(const ClickLog& log, const Eigen::VectorXd& labels,
                             const Eigen::VectorXd& weights, RankingModel model, int steps,
                             const RankerHyper& hyper, std::vector<double>* loss_trace = nullptr);

RankingModel train_naive(const ClickLog& log, const RankerHyper& hyper,
                         std::vector<double>* loss_trace = nullptr);

struct PropensityTable {
  std::vector<double> propensity;  // index k-1 holds position k

  double at(int position) const;
};

// Pool-adjacent-violators projection onto nonincreasing sequences under
// weighted squared error.
std::vector<double> isotonic_nonincreasing(const std::vector<double>& values,
                                           const std::vector<double>& weights);

// CTR(k)/CTR(1), projected to be nonincreasing, floored at 0.01. Throws
// std::invalid_argument when a position in 1..K is never shown or CTR(1)=0.
PropensityTable estimate_propensity(const ClickLog& log);

RankingModel train_ipw(const ClickLog& log, const PropensityTable& propensity,
                       const RankerHyper& hyper, std::vector<double>* loss_trace = nullptr);

}  // namespace wpultr

#endif  // WPULTR_BASELINES_HPP_
