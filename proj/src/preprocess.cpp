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

#include "wpultr/preprocess.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wpultr/random.hpp"
#include "wpultr/special_functions.hpp"

namespace wpultr {
namespace {

constexpr double kBtGradTolerance = 1e-8;
constexpr int kBtMaxIterations = 500;

double bt_objective(const Eigen::MatrixXd& wins, const Eigen::VectorXd& s, double lambda) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < wins.rows(); ++i) {
    for (Eigen::Index j = 0; j < wins.cols(); ++j) {
      if (wins(i, j) > 0) ll += wins(i, j) * log_sigmoid(s(i) - s(j));
    }
  }
  return ll - 0.5 * lambda * s.squaredNorm();
}

}  // namespace

double BradleyTerryModel::score(int level) const {
  if (level < 1 || level > levels()) {
    throw SchemaError("ordinal level " + std::to_string(level) + " outside the fitted range");
  }
  return scores(level - 1);
}

double BradleyTerryModel::win_probability(int i, int j) const {
  return sigmoid(score(i) - score(j));
}

BradleyTerryModel fit_bradley_terry(const std::vector<LevelPair>& pairs, double lambda,
                                    int n_levels) {
  if (!(lambda > 0)) {
    throw std::invalid_argument("Bradley-Terry penalty lambda must be positive");
  }
  if (pairs.empty()) throw std::invalid_argument("Bradley-Terry fit needs at least one pair");
  int k = n_levels;
  for (const auto& [w, l] : pairs) {
    if (w < 1 || l < 1) throw std::invalid_argument("ordinal levels are 1-based");
    k = std::max({k, w, l});
  }
  Eigen::MatrixXd wins = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [w, l] : pairs) wins(w - 1, l - 1) += 1.0;

  BradleyTerryModel model;
  model.lambda = lambda;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
  double f = bt_objective(wins, s, lambda);
  model.fit_trace.push_back(f);
  for (int it = 0; it < kBtMaxIterations; ++it) {
    Eigen::VectorXd grad = -lambda * s;
    Eigen::MatrixXd hess = -lambda * Eigen::MatrixXd::Identity(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double c = wins(i, j);
        if (c == 0) continue;
        const double p = sigmoid(s(i) - s(j));
        grad(i) += c * (1.0 - p);
        grad(j) -= c * (1.0 - p);
        const double h = c * p * (1.0 - p);
        hess(i, i) -= h;
        hess(j, j) -= h;
        hess(i, j) += h;
        hess(j, i) += h;
      }
    }
    model.grad_norm = grad.norm();
    if (model.grad_norm < kBtGradTolerance) break;
    // The objective is strictly concave, so -hess is positive definite.
    const Eigen::VectorXd step = (-hess).llt().solve(grad);
    double t = 1.0;
    double f_new = bt_objective(wins, s + step, lambda);
    while (f_new < f + 1e-4 * t * grad.dot(step) && t > 1e-12) {
      t *= 0.5;
      f_new = bt_objective(wins, s + t * step, lambda);
    }
    if (f_new < f) break;  // no ascent possible at machine precision
    s += t * step;
    f = f_new;
    model.fit_trace.push_back(f);
  }
  model.scores = s;
  return model;
}

std::vector<LevelPair> ordinal_pairs(const ClickLog& log, std::string_view feature) {
  const auto idx = log.schema().index_of(feature);
  if (!idx) throw SchemaError("no feature named '" + std::string(feature) + "'");
  std::vector<LevelPair> out;
  for (const auto& g : log.groups()) {
    const auto recs = log.group_records(g);
    for (std::size_t a = 0; a < recs.size(); ++a) {
      for (std::size_t b = a + 1; b < recs.size(); ++b) {
        const int la = static_cast<int>(recs[a].sepp[*idx]);
        const int lb = static_cast<int>(recs[b].sepp[*idx]);
        if (la < lb) out.emplace_back(la, lb);
        if (lb < la) out.emplace_back(lb, la);
      }
    }
  }
  return out;
}

std::vector<LevelPair> position_pairs(const ClickLog& log) {
  std::vector<LevelPair> out;
  for (const auto& g : log.groups()) {
    const auto recs = log.group_records(g);
    for (std::size_t a = 0; a < recs.size(); ++a) {
      for (std::size_t b = a + 1; b < recs.size(); ++b) {
        const int pa = recs[a].rank_position;
        const int pb = recs[b].rank_position;
        if (pa < pb) out.emplace_back(pa, pb);
        if (pb < pa) out.emplace_back(pb, pa);
      }
    }
  }
  return out;
}

EmbeddingTable make_embedding(int cardinality, int dim, Rng& rng, double sd) {
  EmbeddingTable e;
  e.table = normal_matrix<double>(cardinality, dim, sd, rng);
  return e;
}

Standardizer Standardizer::fit(const Eigen::Ref<const Eigen::VectorXd>& values) {
  Standardizer s;
  if (values.size() == 0) return s;
  s.mean = values.mean();
  s.sd = std::sqrt((values.array() - s.mean).square().mean());
  // Rounding can leave a tiny sd on constant input; treat it as constant.
  if (s.sd <= 1e-12 * std::max(1.0, std::fabs(s.mean))) s.sd = 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Layout

void ColumnLayout::add(std::string label, NodeKind kind, Eigen::Index width, int cardinality) {
  if (has(label)) throw SchemaError("duplicate layout node '" + label + "'");
  nodes_.push_back({std::move(label), kind, cols_, width, cardinality});
  cols_ += width;
}

const ColumnLayout::Node& ColumnLayout::node(std::string_view label) const {
  for (const auto& n : nodes_) {
    if (n.label == label) return n;
  }
  throw SchemaError("layout has no node '" + std::string(label) + "'");
}

bool ColumnLayout::has(std::string_view label) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const Node& n) { return n.label == label; });
}

std::vector<std::string> ColumnLayout::labels() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) out.push_back(n.label);
  return out;
}

Eigen::VectorXd ColumnLayout::mask(const std::vector<std::string>& labels) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(cols_);
  for (const auto& l : labels) {
    const auto& n = node(l);
    m.segment(n.begin, n.width).setOnes();
  }
  return m;
}

Eigen::Ref<const Eigen::VectorXd> DesignMatrix::column(std::string_view label) const {
  const auto& n = layout.node(label);
  if (n.width != 1) {
    throw SchemaError("node '" + std::string(label) + "' spans several columns");
  }
  return values.col(n.begin);
}

DesignMatrix DesignMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  DesignMatrix out;
  out.layout = layout;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
  }
  for (const auto& [label, c] : codes) {
    Eigen::VectorXi sub(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      sub(static_cast<Eigen::Index>(i)) = c(static_cast<Eigen::Index>(rows[i]));
    }
    out.codes.emplace(label, std::move(sub));
  }
  return out;
}

void DesignMatrix::set_scores(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  if (scores.size() != rows()) throw SchemaError("score vector length mismatch");
  values.col(layout.node(kRel).begin) = scores;
}

FittedTransforms fit_transforms(const ClickLog& log, const TransformOptions& options) {
  FittedTransforms t;
  t.embedding_dim = options.embedding_dim;
  Rng rng = make_rng(options.seed, 0x7e3b);
  const auto& schema = log.schema();
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& spec = schema[f];
    switch (spec.kind) {
      case FeatureKind::kOrdinal: {
        const auto pairs = ordinal_pairs(log, spec.name);
        BradleyTerryModel bt;
        if (pairs.empty()) {
          bt.scores = Eigen::VectorXd::Zero(spec.cardinality);
          bt.lambda = options.bt_lambda;
        } else {
          bt = fit_bradley_terry(pairs, options.bt_lambda, spec.cardinality);
        }
        Eigen::VectorXd col(static_cast<Eigen::Index>(log.size()));
        for (std::size_t i = 0; i < log.size(); ++i) {
          col(static_cast<Eigen::Index>(i)) = bt.score(static_cast<int>(log[i].sepp[f]));
        }
        t.ordinal_scale[spec.name] = Standardizer::fit(col);
        t.bradley_terry[spec.name] = std::move(bt);
        break;
      }
      case FeatureKind::kCategorical:
        t.embeddings[spec.name] = make_embedding(spec.cardinality, options.embedding_dim, rng);
        break;
      case FeatureKind::kContinuous: {
        Eigen::VectorXd col(static_cast<Eigen::Index>(log.size()));
        for (std::size_t i = 0; i < log.size(); ++i) {
          col(static_cast<Eigen::Index>(i)) = log[i].sepp[f];
        }
        t.standardizers[spec.name] = Standardizer::fit(col);
        break;
      }
    }
  }
  return t;
}

ColumnLayout design_layout(const FeatureSchema& schema, const FittedTransforms& transforms) {
  ColumnLayout layout;
  layout.add(std::string(kClick), NodeKind::kClick, 1, 2);
  layout.add(std::string(kRel), NodeKind::kScore, 1);
  for (const auto& spec : schema.entries()) {
    switch (spec.kind) {
      case FeatureKind::kOrdinal:
        if (!transforms.bradley_terry.count(spec.name)) {
          throw SchemaError("no Bradley-Terry model for '" + spec.name + "'");
        }
        layout.add(spec.name, NodeKind::kOrdinal, 1, spec.cardinality);
        break;
      case FeatureKind::kCategorical: {
        const auto it = transforms.embeddings.find(spec.name);
        if (it == transforms.embeddings.end()) {
          throw SchemaError("no embedding table for '" + spec.name + "'");
        }
        layout.add(spec.name, NodeKind::kCategorical, it->second.dim(), spec.cardinality);
        break;
      }
      case FeatureKind::kContinuous:
        if (!transforms.standardizers.count(spec.name)) {
          throw SchemaError("no standardizer for '" + spec.name + "'");
        }
        layout.add(spec.name, NodeKind::kContinuous, 1);
        break;
    }
  }
  return layout;
}

DesignMatrix transform_log(const ClickLog& log, const FittedTransforms& transforms,
                           const Eigen::VectorXd* scores) {
  const auto& schema = log.schema();
  DesignMatrix z;
  z.layout = design_layout(schema, transforms);
  const auto n = static_cast<Eigen::Index>(log.size());
  if (scores && scores->size() != n) throw SchemaError("score vector length mismatch");
  z.values = Eigen::MatrixXd::Zero(n, z.layout.cols());
  Eigen::VectorXi click_codes(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = log[static_cast<std::size_t>(i)];
    z.values(i, 0) = r.click;
    click_codes(i) = r.click;
    if (scores) {
      z.values(i, 1) = (*scores)(i);
    } else if (r.logged_score) {
      z.values(i, 1) = *r.logged_score;
    } else {
      throw SchemaError("record " + std::to_string(i) +
                        " has no logged score and no scores were supplied");
    }
  }
  z.codes.emplace(std::string(kClick), std::move(click_codes));
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& spec = schema[f];
    const auto& node = z.layout.node(spec.name);
    Eigen::VectorXi codes;
    if (spec.discrete()) codes.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = log[static_cast<std::size_t>(i)].sepp[f];
      switch (spec.kind) {
        case FeatureKind::kOrdinal: {
          const auto& bt = transforms.bradley_terry.at(spec.name);
          const int level = static_cast<int>(v);
          if (level < 1 || level > bt.levels()) {
            throw SchemaError("unseen level " + std::to_string(level) + " of ordinal feature '" +
                              spec.name + "'");
          }
          z.values(i, node.begin) = transforms.ordinal_scale.at(spec.name).apply(bt.score(level));
          codes(i) = level - 1;
          break;
        }
        case FeatureKind::kCategorical: {
          const auto& emb = transforms.embeddings.at(spec.name);
          const int level = static_cast<int>(v);
          if (level < 0 || level >= emb.cardinality()) {
            throw SchemaError("unseen level " + std::to_string(level) +
                              " of categorical feature '" + spec.name + "'");
          }
          z.values.row(i).segment(node.begin, node.width) = emb.table.row(level);
          codes(i) = level;
          break;
        }
        case FeatureKind::kContinuous:
          z.values(i, node.begin) = transforms.standardizers.at(spec.name).apply(v);
          break;
      }
    }
    if (spec.discrete()) z.codes.emplace(spec.name, std::move(codes));
  }
  return z;
}

// ---------------------------------------------------------------------------
// transforms.json

Json transforms_to_json(const FittedTransforms& t) {
  Json bt = Json::object();
  for (const auto& [name, m] : t.bradley_terry) {
    const auto& scale = t.ordinal_scale.at(name);
    bt[name] = {{"scores", vector_to_json(m.scores)},
                {"lambda", m.lambda},
                {"scale", {{"mean", scale.mean}, {"sd", scale.sd}}}};
  }
  Json emb = Json::object();
  for (const auto& [name, e] : t.embeddings) {
    emb[name] = {{"table", matrix_to_json(e.table)}, {"trainable", e.trainable}};
  }
  Json st = Json::object();
  for (const auto& [name, s] : t.standardizers) st[name] = {{"mean", s.mean}, {"sd", s.sd}};
  return Json{{"embedding_dim", t.embedding_dim},
              {"bradley_terry", bt},
              {"embeddings", emb},
              {"standardizers", st}};
}

FittedTransforms transforms_from_json(const Json& j) {
  FittedTransforms t;
  t.embedding_dim = j.at("embedding_dim").get<int>();
  for (const auto& [name, m] : j.at("bradley_terry").items()) {
    BradleyTerryModel bt;
    bt.scores = vector_from_json(m.at("scores"));
    bt.lambda = m.at("lambda").get<double>();
    t.bradley_terry[name] = std::move(bt);
    t.ordinal_scale[name] = {m.at("scale").at("mean").get<double>(),
                             m.at("scale").at("sd").get<double>()};
  }
  for (const auto& [name, e] : j.at("embeddings").items()) {
    t.embeddings[name] = {matrix_from_json(e.at("table")), e.at("trainable").get<bool>()};
  }
  for (const auto& [name, s] : j.at("standardizers").items()) {
    t.standardizers[name] = {s.at("mean").get<double>(), s.at("sd").get<double>()};
  }
  return t;
}

}  // namespace wpultr
