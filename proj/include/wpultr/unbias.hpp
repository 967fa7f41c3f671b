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

#ifndef WPULTR_UNBIAS_HPP_
#define WPULTR_UNBIAS_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wpultr/baselines.hpp"
#include "wpultr/causal.hpp"
#include "wpultr/density.hpp"
#include "wpultr/preprocess.hpp"

namespace wpultr {

struct WeightVector {
  Eigen::VectorXd raw;         // unclipped ratios
  Eigen::VectorXd normalized;  // clipped, then rescaled to mean 1
  double clip_low = 0.1;
  double clip_high = 10.0;
  double clipped_fraction = 0.0;
};

// Clips raw weights to [low, high] and rescales them to mean 1.
WeightVector normalize_weights(Eigen::VectorXd raw, double clip_low, double clip_high);

// p(x) / p(x | r_hat) with p(x) marginalized over the batch's scores. `rows`
// are design rows (batch x cols) whose REL column holds the current scores.
// Throws std::invalid_argument when the batch has fewer than 2 rows or the
// estimator's parents are not exactly {REL}.
WeightVector weight_case1(const ConditionalEstimator& est, const Eigen::MatrixXd& rows,
                          const Eigen::VectorXd& targets, double clip_low = 0.1,
                          double clip_high = 10.0);

// p(x | m) / p(x | r_hat, m), where p(x | m) averages the estimator over
// every batch member's score at the row's own m. Throws when m is empty,
// REL is not a parent, or the batch has fewer than 2 rows.
WeightVector weight_case2(const ConditionalEstimator& est, const Eigen::MatrixXd& rows,
                          const Eigen::VectorXd& targets, double clip_low = 0.1,
                          double clip_high = 10.0);

// Elementwise product of raw weights, then clip and normalize.
WeightVector total_weight(const std::vector<WeightVector>& parts, Eigen::Index n,
                          double clip_low = 0.1, double clip_high = 10.0);

struct ClickLoss {
  double loss = 0.0;
  Eigen::VectorXd param_grad;  // d loss / d phi_c
  Eigen::VectorXd score_grad;  // d loss / d r_hat per row
};

// -(1/B) sum w log p(c | parents).
ClickLoss reweighted_click_loss(const ConditionalEstimator& click_head, const Eigen::MatrixXd& rows,
                                const Eigen::VectorXd& clicks, const Eigen::VectorXd& weights);

// Copy of `rows` with every presentation column set to 0 (the standardized
// reference value); only the REL column survives.
Eigen::MatrixXd blocked_rows(const Eigen::MatrixXd& rows, const ColumnLayout& layout);

// Gradient of the reweighted click loss with respect to the ranker's flat
// parameters, taken through the REL input only. Scores are standardized
// within the batch before they reach the click head (so the batch needs at
// least 2 rows), which keeps the head's tanh units out of saturation as the
// ranker's scale drifts. The click probability used
// is the click head averaged over the presentation rows in `reference`
// (REL column ignored), i.e. p(c | do(REL)); the batch's own presentation
// columns never enter, so the result does not depend on them. An empty
// reference means one all-zero row (the standardized reference value).
// Throws ConfigError when REL is not a click-head parent.
Eigen::VectorXd blocked_gradient(const RankingModel& ranker, const Eigen::MatrixXd& ranker_inputs,
                                 const ConditionalEstimator& click_head,
                                 const Eigen::MatrixXd& rows, const Eigen::VectorXd& clicks,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::MatrixXd& reference = {});

void blocked_update(RankingModel& ranker, const Eigen::MatrixXd& ranker_inputs,
                    const ConditionalEstimator& click_head, const Eigen::MatrixXd& rows,
                    const Eigen::VectorXd& clicks, const Eigen::VectorXd& weights, double lr,
                    const Eigen::MatrixXd& reference = {});

enum class GraphSource { kDiscover, kFixed };

// The score standing in for REL when discovering the graph and estimating
// influence weights. Positions in a log were caused by the logging ranker's
// score, so kLogged (used when every record carries one) is the default;
// kRanker uses the current ranker's scores, refreshed with the graph.
enum class ConfounderScore { kLogged, kRanker };

struct BalConfig {
  int steps = 2000;
  int batch_size = 256;
  double warm_fraction = 0.1;
  int discovery_period = 500;
  int discovery_sample = 2000;
  double clip_low = 0.1;
  double clip_high = 10.0;
  double lr_click = 1e-3;
  double lr_rank = 1e-3;
  std::uint64_t seed = 0;

  RankerHyper ranker;
  DensityHyper density;       // influence estimators
  int refit_epochs = 20;      // epochs per estimator refit inside the loop
  int reference_rows = 32;    // presentation rows the blocked update averages over
  PcOptions discovery;
  TransformOptions transform;

  ConfounderScore confounder = ConfounderScore::kLogged;
  GraphSource graph_source = GraphSource::kDiscover;
  std::optional<CausalGraph> fixed_graph;
  // Presentation nodes visible to the method; empty means all.
  std::vector<std::string> sepp_nodes;

  void validate() const;
};

struct WeightStats {
  int step = 0;
  double mean = 0, sd = 0, min = 0, max = 0, clipped_fraction = 0;
};

struct LossPoint {
  int step = 0;
  std::string phase;
  double loss = 0.0;
};

struct BalRun {
  RankingModel ranker;
  ConditionalEstimator click_head;
  FittedTransforms transforms;
  std::vector<GraphSnapshot> snapshots;
  std::vector<WeightStats> weight_stats;
  std::vector<LossPoint> losses;
  std::vector<std::string> conflicts;
  // Final normalized weights over the whole log (record order), computed in
  // seeded random batch-sized chunks with the last influence estimators.
  Eigen::VectorXd final_weights;
};

BalRun train_bal(const ClickLog& log, const BalConfig& config);

// Method presets for the train subcommand: "bal", "pb-bal" (fixed
// REL->p->CLICK graph), "fb-bal" (every SEPP feature confounded), "bal-pos"
// and "bal-mm" (discovery restricted to one SEPP feature). Throws ConfigError
// on an unknown method or a schema lacking the needed feature.
BalConfig bal_variant(const std::string& method, const FeatureSchema& schema, BalConfig base,
                      const std::string& position_feature = "position",
                      const std::string& media_feature = "media");

// graph_snapshots.ndjson, weights_stats.csv, loss.csv, ranker.json,
// click_head.json, transforms.json.
void write_bal_artifacts(const BalRun& run, const std::string& dir);

}  // namespace wpultr

#endif  // WPULTR_UNBIAS_HPP_
