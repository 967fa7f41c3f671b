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

#ifndef WPULTR_DENSITY_HPP_
#define WPULTR_DENSITY_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wpultr/json_io.hpp"
#include "wpultr/nn.hpp"
#include "wpultr/preprocess.hpp"

namespace wpultr {

enum class HeadKind { kGaussian, kCategorical, kBernoulli };

std::string_view to_string(HeadKind head);
HeadKind head_kind_from_string(std::string_view text);
// Bernoulli for the click, categorical for discrete features (ordinal
// levels included), gaussian otherwise.
HeadKind default_head(NodeKind kind);

struct DensityHyper {
  std::vector<int> hidden{32, 32};
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_epochs = 200;
  double grad_tolerance = 1e-6;
  bool full_batch = false;
  std::uint64_t seed = 0;
};

struct FitReport {
  double final_loglik = 0.0;
  int epochs = 0;
  double grad_norm = 0.0;
  std::vector<double> epoch_loglik;  // mean log-likelihood after each epoch
};

// Zeroes every column of `rows` (n x layout.cols()) not owned by `parents`.
// Throws SchemaError on an unknown label.
Eigen::MatrixXd mask_input(const Eigen::MatrixXd& rows, const std::vector<std::string>& parents,
                           const ColumnLayout& layout);

// p(target | parents) with a masked-input MLP. Inputs are full design rows;
// non-parent columns never reach the first layer.
class ConditionalEstimator {
 public:
  ConditionalEstimator() = default;
  ConditionalEstimator(std::string target, std::vector<std::string> parents, HeadKind head,
                       ColumnLayout layout, const DensityHyper& hyper);

  const std::string& target() const { return target_; }
  const std::vector<std::string>& parents() const { return parents_; }
  HeadKind head() const { return head_; }
  int cardinality() const { return cardinality_; }
  const ColumnLayout& layout() const { return layout_; }
  const Mlp<double>& net() const { return net_; }
  Mlp<double>& net() { return net_; }

  // Target values: the continuous column for gaussian heads, the 0-based
  // code for categorical and bernoulli heads.
  Eigen::VectorXd targets(const DesignMatrix& z) const;

  // Raw head outputs, (outputs x n).
  Eigen::MatrixXd outputs(const Eigen::MatrixXd& rows) const;
  // Per-row log density (gaussian) or log mass.
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& rows, const Eigen::VectorXd& y) const;
  Eigen::VectorXd log_prob(const DesignMatrix& z) const;
  double log_prob(const DesignMatrix& z, Eigen::Index row) const;
  // Class probabilities for categorical/bernoulli heads, (card x n).
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& rows) const;

  // sum_i w_i log p(y_i | rows_i) / n. Fills the gradient with respect to the
  // flat parameters and/or the input rows (n x cols) when requested.
  double weighted_loglik(const Eigen::MatrixXd& rows, const Eigen::VectorXd& y,
                         const Eigen::VectorXd* weights, Eigen::VectorXd* param_grad,
                         Eigen::MatrixXd* input_grad) const;

 private:
  Eigen::MatrixXd head_gradient(const Eigen::MatrixXd& out, const Eigen::VectorXd& y,
                                Eigen::VectorXd* loglik) const;

  std::string target_;
  std::vector<std::string> parents_;
  HeadKind head_ = HeadKind::kGaussian;
  int cardinality_ = 0;
  ColumnLayout layout_;
  Mlp<double> net_;

  friend Json estimator_to_json(const ConditionalEstimator& est);
  friend ConditionalEstimator estimator_from_json(const Json& j);
};

// Shrinks the output layer and sets its bias to the marginal of `y`.
void initialize_to_marginal(ConditionalEstimator& est, const Eigen::VectorXd& y);

// Maximum likelihood by mini-batch Adam (or full batch). Throws
// std::invalid_argument when the target is among the parents, when fewer
// than 50 rows are given, or when the head does not suit the target kind.
std::pair<ConditionalEstimator, FitReport> fit(const DesignMatrix& z, const std::string& target,
                                               const std::vector<std::string>& parents,
                                               HeadKind head, const DensityHyper& hyper);

Json layout_to_json(const ColumnLayout& layout);
ColumnLayout layout_from_json(const Json& j);
Json estimator_to_json(const ConditionalEstimator& est);
ConditionalEstimator estimator_from_json(const Json& j);

}  // namespace wpultr

#endif  // WPULTR_DENSITY_HPP_
