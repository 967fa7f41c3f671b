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

#ifndef WPULTR_PREPROCESS_HPP_
#define WPULTR_PREPROCESS_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wpultr/core.hpp"
#include "wpultr/json_io.hpp"

namespace wpultr {

// (better level, worse level); the first element wins the comparison.
using LevelPair = std::pair<int, int>;

// Bradley-Terry scores over ordinal levels. scores(k-1) is the score of
// level k; larger means better. Levels never compared keep score 0.
struct BradleyTerryModel {
  Eigen::VectorXd scores;
  double lambda = 1.0;
  std::vector<double> fit_trace;  // penalized log-likelihood per iteration
  double grad_norm = 0.0;

  int levels() const { return static_cast<int>(scores.size()); }
  double score(int level) const;
  // p(i beats j) = e^{s_i} / (e^{s_i} + e^{s_j}).
  double win_probability(int i, int j) const;
};

// Maximizes sum log sigmoid(s_w - s_l) - lambda/2 * |s|^2 over levels
// 1..max(levels seen, n_levels) with a damped Newton ascent. Throws
// std::invalid_argument when pairs are empty or lambda <= 0.
BradleyTerryModel fit_bradley_terry(const std::vector<LevelPair>& pairs, double lambda,
                                    int n_levels = 0);

// One (i, j) pair for every i < j co-occurring in a query group.
std::vector<LevelPair> position_pairs(const ClickLog& log);
// Same, for an arbitrary ordinal SEPP feature.
std::vector<LevelPair> ordinal_pairs(const ClickLog& log, std::string_view feature);

struct EmbeddingTable {
  Eigen::MatrixXd table;  // (cardinality x dim)
  bool trainable = false;

  Eigen::Index cardinality() const { return table.rows(); }
  Eigen::Index dim() const { return table.cols(); }
};

EmbeddingTable make_embedding(int cardinality, int dim, Rng& rng, double sd = 0.1);

struct Standardizer {
  double mean = 0.0;
  double sd = 0.0;  // population sd

  static Standardizer fit(const Eigen::Ref<const Eigen::VectorXd>& values);
  // Constant features (sd == 0) map to 0.
  double apply(double v) const { return sd > 0 ? (v - mean) / sd : 0.0; }
};

enum class NodeKind { kClick, kScore, kContinuous, kOrdinal, kCategorical };

// Column map of a design matrix: each node owns a contiguous column span.
class ColumnLayout {
 public:
  struct Node {
    std::string label;
    NodeKind kind = NodeKind::kContinuous;
    Eigen::Index begin = 0;
    Eigen::Index width = 1;
    int cardinality = 0;
    bool operator==(const Node&) const = default;
  };

  ColumnLayout() = default;
  void add(std::string label, NodeKind kind, Eigen::Index width, int cardinality = 0);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::string_view label) const;
  bool has(std::string_view label) const;
  Eigen::Index cols() const { return cols_; }
  std::vector<std::string> labels() const;
  // 1 on every column owned by `labels`, 0 elsewhere. Throws SchemaError on
  // unknown labels.
  Eigen::VectorXd mask(const std::vector<std::string>& labels) const;

  bool operator==(const ColumnLayout&) const = default;

 private:
  std::vector<Node> nodes_;
  Eigen::Index cols_ = 0;
};

// Z = [click, r_hat, SEPP columns...] plus the raw discrete codes needed as
// targets by categorical heads (0-based codes for every discrete node and
// for the click).
struct DesignMatrix {
  Eigen::MatrixXd values;  // (rows x layout.cols())
  ColumnLayout layout;
  std::map<std::string, Eigen::VectorXi> codes;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Ref<const Eigen::VectorXd> column(std::string_view label) const;
  DesignMatrix select_rows(const std::vector<std::size_t>& rows) const;
  // Replaces the REL column.
  void set_scores(const Eigen::Ref<const Eigen::VectorXd>& scores);
};

struct TransformOptions {
  double bt_lambda = 1.0;
  int embedding_dim = 4;
  std::uint64_t seed = 0;
};

// Everything fitted on a log that transform_log needs.
struct FittedTransforms {
  std::map<std::string, BradleyTerryModel> bradley_terry;
  // Standardizes the Bradley-Terry score column of each ordinal feature.
  std::map<std::string, Standardizer> ordinal_scale;
  std::map<std::string, EmbeddingTable> embeddings;
  std::map<std::string, Standardizer> standardizers;
  int embedding_dim = 4;
};

FittedTransforms fit_transforms(const ClickLog& log, const TransformOptions& options);

ColumnLayout design_layout(const FeatureSchema& schema, const FittedTransforms& transforms);

// Row order follows the log. The REL column comes from `scores` when given,
// otherwise from the records' logged scores (SchemaError when absent).
// Throws SchemaError naming an unseen categorical level.
DesignMatrix transform_log(const ClickLog& log, const FittedTransforms& transforms,
                           const Eigen::VectorXd* scores = nullptr);

Json transforms_to_json(const FittedTransforms& t);
FittedTransforms transforms_from_json(const Json& j);

}  // namespace wpultr

#endif  // WPULTR_PREPROCESS_HPP_
