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

#include "wpultr/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wpultr/special_functions.hpp"

namespace wpultr {

std::string_view to_string(HeadKind head) {
  switch (head) {
    case HeadKind::kGaussian:
      return "gaussian";
    case HeadKind::kCategorical:
      return "categorical";
    case HeadKind::kBernoulli:
      return "bernoulli";
  }
  return "gaussian";
}

HeadKind head_kind_from_string(std::string_view text) {
  if (text == "gaussian") return HeadKind::kGaussian;
  if (text == "categorical") return HeadKind::kCategorical;
  if (text == "bernoulli") return HeadKind::kBernoulli;
  throw ConfigError("unknown head '" + std::string(text) + "'");
}

HeadKind default_head(NodeKind kind) {
  switch (kind) {
    case NodeKind::kClick:
      return HeadKind::kBernoulli;
    case NodeKind::kOrdinal:
    case NodeKind::kCategorical:
      return HeadKind::kCategorical;
    default:
      return HeadKind::kGaussian;
  }
}

Eigen::MatrixXd mask_input(const Eigen::MatrixXd& rows, const std::vector<std::string>& parents,
                           const ColumnLayout& layout) {
  const Eigen::VectorXd m = layout.mask(parents);
  if (rows.cols() != m.size()) throw SchemaError("mask_input: row width does not match layout");
  return rows * m.asDiagonal();
}

namespace {

int output_size(HeadKind head, int cardinality) {
  switch (head) {
    case HeadKind::kGaussian:
      return 2;
    case HeadKind::kCategorical:
      return cardinality;
    case HeadKind::kBernoulli:
      return 1;
  }
  return 1;
}

void check_head(HeadKind head, const ColumnLayout::Node& node) {
  bool ok = false;
  switch (node.kind) {
    case NodeKind::kClick:
      ok = head == HeadKind::kBernoulli;
      break;
    case NodeKind::kCategorical:
      ok = head == HeadKind::kCategorical;
      break;
    case NodeKind::kOrdinal:
      ok = head == HeadKind::kCategorical || head == HeadKind::kGaussian;
      break;
    case NodeKind::kScore:
    case NodeKind::kContinuous:
      ok = head == HeadKind::kGaussian;
      break;
  }
  if (!ok) {
    throw std::invalid_argument(std::string(to_string(head)) + " head does not fit target '" +
                                node.label + "'");
  }
}

}  // namespace

ConditionalEstimator::ConditionalEstimator(std::string target, std::vector<std::string> parents,
                                           HeadKind head, ColumnLayout layout,
                                           const DensityHyper& hyper)
    : target_(std::move(target)),
      parents_(std::move(parents)),
      head_(head),
      layout_(std::move(layout)) {
  const auto& node = layout_.node(target_);
  check_head(head_, node);
  if (std::find(parents_.begin(), parents_.end(), target_) != parents_.end()) {
    throw std::invalid_argument("target '" + target_ + "' listed among its own parents");
  }
  cardinality_ = head_ == HeadKind::kBernoulli ? 2 : (head_ == HeadKind::kCategorical ? node.cardinality : 0);
  if (head_ == HeadKind::kCategorical && cardinality_ < 2) {
    throw std::invalid_argument("categorical target '" + target_ + "' needs cardinality >= 2");
  }
  std::vector<int> sizes{static_cast<int>(layout_.cols())};
  sizes.insert(sizes.end(), hyper.hidden.begin(), hyper.hidden.end());
  sizes.push_back(output_size(head_, cardinality_));
  Rng rng = make_rng(hyper.seed, 0xde05);
  net_ = Mlp<double>(sizes, rng, layout_.mask(parents_));
}

Eigen::VectorXd ConditionalEstimator::targets(const DesignMatrix& z) const {
  if (head_ == HeadKind::kGaussian) return z.column(target_);
  const auto it = z.codes.find(target_);
  if (it == z.codes.end()) throw SchemaError("design matrix has no codes for '" + target_ + "'");
  return it->second.cast<double>();
}

Eigen::MatrixXd ConditionalEstimator::outputs(const Eigen::MatrixXd& rows) const {
  return net_.forward(rows.transpose());
}

Eigen::MatrixXd ConditionalEstimator::head_gradient(const Eigen::MatrixXd& out,
                                                    const Eigen::VectorXd& y,
                                                    Eigen::VectorXd* loglik) const {
  const Eigen::Index n = out.cols();
  Eigen::MatrixXd g(out.rows(), n);
  loglik->resize(n);
  static const double kHalfLog2Pi = 0.5 * std::log(2.0 * M_PI);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (head_) {
      case HeadKind::kGaussian: {
        const double inv_sd = std::exp(-out(1, i));
        const double zs = (y(i) - out(0, i)) * inv_sd;
        (*loglik)(i) = -0.5 * zs * zs - out(1, i) - kHalfLog2Pi;
        g(0, i) = zs * inv_sd;
        g(1, i) = zs * zs - 1.0;
        break;
      }
      case HeadKind::kCategorical: {
        const double mx = out.col(i).maxCoeff();
        const Eigen::VectorXd e = (out.col(i).array() - mx).exp();
        const double s = e.sum();
        const int k = static_cast<int>(y(i));
        if (k < 0 || k >= cardinality_) {
          throw SchemaError("code " + std::to_string(k) + " outside categorical head of '" +
                            target_ + "'");
        }
        (*loglik)(i) = out(k, i) - mx - std::log(s);
        g.col(i) = -e / s;
        g(k, i) += 1.0;
        break;
      }
      case HeadKind::kBernoulli: {
        const double l = out(0, i);
        (*loglik)(i) = y(i) > 0.5 ? log_sigmoid(l) : log_sigmoid(-l);
        g(0, i) = y(i) - sigmoid(l);
        break;
      }
    }
  }
  return g;
}

Eigen::VectorXd ConditionalEstimator::log_prob(const Eigen::MatrixXd& rows,
                                               const Eigen::VectorXd& y) const {
  Eigen::VectorXd ll;
  head_gradient(outputs(rows), y, &ll);
  return ll;
}

Eigen::VectorXd ConditionalEstimator::log_prob(const DesignMatrix& z) const {
  return log_prob(z.values, targets(z));
}

double ConditionalEstimator::log_prob(const DesignMatrix& z, Eigen::Index row) const {
  const Eigen::VectorXd y = targets(z);
  return log_prob(Eigen::MatrixXd(z.values.row(row)), Eigen::VectorXd::Constant(1, y(row)))(0);
}

Eigen::MatrixXd ConditionalEstimator::probabilities(const Eigen::MatrixXd& rows) const {
  const Eigen::MatrixXd out = outputs(rows);
  if (head_ == HeadKind::kBernoulli) {
    Eigen::MatrixXd p(2, out.cols());
    for (Eigen::Index i = 0; i < out.cols(); ++i) {
      p(1, i) = sigmoid(out(0, i));
      p(0, i) = sigmoid(-out(0, i));
    }
    return p;
  }
  if (head_ != HeadKind::kCategorical) {
    throw std::logic_error("probabilities() needs a discrete head");
  }
  Eigen::MatrixXd p(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const Eigen::VectorXd e = (out.col(i).array() - out.col(i).maxCoeff()).exp();
    p.col(i) = e / e.sum();
  }
  return p;
}

double ConditionalEstimator::weighted_loglik(const Eigen::MatrixXd& rows, const Eigen::VectorXd& y,
                                             const Eigen::VectorXd* weights,
                                             Eigen::VectorXd* param_grad,
                                             Eigen::MatrixXd* input_grad) const {
  const Eigen::Index n = rows.rows();
  if (n == 0) throw std::invalid_argument("weighted_loglik: empty batch");
  Mlp<double>::Cache cache;
  const Eigen::MatrixXd out = net_.forward(rows.transpose(), &cache);
  Eigen::VectorXd ll;
  Eigen::MatrixXd g = head_gradient(out, y, &ll);
  const double inv_n = 1.0 / static_cast<double>(n);
  double value = 0.0;
  if (weights) {
    value = weights->dot(ll) * inv_n;
    g = g * (*weights * inv_n).asDiagonal();
  } else {
    value = ll.sum() * inv_n;
    g *= inv_n;
  }
  if (param_grad || input_grad) {
    std::vector<Mlp<double>::Layer> layers;
    const Eigen::MatrixXd back = net_.backward(cache, g, param_grad ? &layers : nullptr);
    if (param_grad) *param_grad = Mlp<double>::pack(layers);
    if (input_grad) *input_grad = back.transpose();
  }
  return value;
}

void initialize_to_marginal(ConditionalEstimator& est, const Eigen::VectorXd& y) {
  auto& last = est.net().layers().back();
  last.weight *= 0.1;
  if (y.size() == 0) return;
  if (est.head() == HeadKind::kGaussian) {
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().mean());
    last.bias(0) = mean;
    last.bias(1) = std::log(std::max(sd, 1e-3));
  } else {
    Eigen::VectorXd counts = Eigen::VectorXd::Constant(est.cardinality(), 0.5);
    for (Eigen::Index i = 0; i < y.size(); ++i) counts(static_cast<Eigen::Index>(y(i))) += 1.0;
    if (est.head() == HeadKind::kBernoulli) {
      last.bias(0) = std::log(counts(1) / counts(0));
    } else {
      last.bias = counts.array().log();
      last.bias.array() -= last.bias.mean();
    }
  }
}

std::pair<ConditionalEstimator, FitReport> fit(const DesignMatrix& z, const std::string& target,
                                               const std::vector<std::string>& parents,
                                               HeadKind head, const DensityHyper& hyper) {
  if (z.rows() < 50) throw std::invalid_argument("fit: need at least 50 rows");
  if (hyper.batch_size < 1 || hyper.max_epochs < 0) {
    throw std::invalid_argument("fit: batch_size must be >= 1 and max_epochs >= 0");
  }
  ConditionalEstimator est(target, parents, head, z.layout, hyper);
  const Eigen::VectorXd y = est.targets(z);
  const Eigen::Index n = z.rows();

  initialize_to_marginal(est, y);

  FitReport report;
  Adam<double> opt(hyper.learning_rate);
  Eigen::VectorXd theta = est.net().flat();
  Rng rng = make_rng(hyper.seed, 0xf17);
  const Eigen::Index batch = hyper.full_batch ? n : std::min<Eigen::Index>(hyper.batch_size, n);
  Eigen::VectorXd grad;
  Eigen::MatrixXd rows;
  Eigen::VectorXd ys;
  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    std::vector<std::size_t> order;
    if (hyper.full_batch) {
      order.resize(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    } else {
      order = permutation(static_cast<std::size_t>(n), rng);
    }
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      rows.resize(len, z.values.cols());
      ys.resize(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        const auto r = static_cast<Eigen::Index>(order[static_cast<std::size_t>(start + i)]);
        rows.row(i) = z.values.row(r);
        ys(i) = y(r);
      }
      est.weighted_loglik(rows, ys, nullptr, &grad, nullptr);
      opt.step(theta, -grad);
      est.net().set_flat(theta);
    }
    report.final_loglik = est.weighted_loglik(z.values, y, nullptr, &grad, nullptr);
    report.grad_norm = grad.norm();
    report.epoch_loglik.push_back(report.final_loglik);
    report.epochs = epoch + 1;
    if (report.grad_norm < hyper.grad_tolerance) break;
  }
  if (report.epochs == 0) {
    report.final_loglik = est.weighted_loglik(z.values, y, nullptr, &grad, nullptr);
    report.grad_norm = grad.norm();
  }
  return {std::move(est), std::move(report)};
}

namespace {

std::string_view node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::kClick:
      return "click";
    case NodeKind::kScore:
      return "score";
    case NodeKind::kContinuous:
      return "continuous";
    case NodeKind::kOrdinal:
      return "ordinal";
    case NodeKind::kCategorical:
      return "categorical";
  }
  return "continuous";
}

NodeKind node_kind_from_name(const std::string& s) {
  if (s == "click") return NodeKind::kClick;
  if (s == "score") return NodeKind::kScore;
  if (s == "continuous") return NodeKind::kContinuous;
  if (s == "ordinal") return NodeKind::kOrdinal;
  if (s == "categorical") return NodeKind::kCategorical;
  throw ConfigError("layout: unknown node kind '" + s + "'");
}

}  // namespace

Json layout_to_json(const ColumnLayout& layout) {
  Json nodes = Json::array();
  for (const auto& n : layout.nodes()) {
    nodes.push_back({{"label", n.label},
                     {"kind", node_kind_name(n.kind)},
                     {"width", n.width},
                     {"cardinality", n.cardinality}});
  }
  return nodes;
}

ColumnLayout layout_from_json(const Json& j) {
  ColumnLayout layout;
  for (const auto& n : j) {
    layout.add(json_require<std::string>(n, "label", "layout"),
               node_kind_from_name(json_require<std::string>(n, "kind", "layout")),
               json_require<Eigen::Index>(n, "width", "layout"),
               json_get<int>(n, "cardinality", "layout", 0));
  }
  return layout;
}

Json estimator_to_json(const ConditionalEstimator& est) {
  return Json{{"target", est.target_},
              {"parents", est.parents_},
              {"head", to_string(est.head_)},
              {"cardinality", est.cardinality_},
              {"layout", layout_to_json(est.layout_)},
              {"net", mlp_to_json(est.net_)}};
}

ConditionalEstimator estimator_from_json(const Json& j) {
  ConditionalEstimator est;
  est.target_ = json_require<std::string>(j, "target", "estimator");
  est.parents_ = json_require<std::vector<std::string>>(j, "parents", "estimator");
  est.head_ = head_kind_from_string(json_require<std::string>(j, "head", "estimator"));
  est.cardinality_ = json_require<int>(j, "cardinality", "estimator");
  est.layout_ = layout_from_json(j.at("layout"));
  est.net_ = mlp_from_json(j.at("net"));
  return est;
}

}  // namespace wpultr
