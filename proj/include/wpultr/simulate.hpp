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

#ifndef WPULTR_SIMULATE_HPP_
#define WPULTR_SIMULATE_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wpultr/core.hpp"
#include "wpultr/json_io.hpp"

namespace wpultr {

// SEPP feature names emitted by the simulator.
inline constexpr std::string_view kPosition = "position";
inline constexpr std::string_view kMedia = "media";
inline constexpr std::string_view kHeight = "height";
inline constexpr std::string_view kMaxHeight = "max_height";

inline constexpr int kScoreBins = 5;

struct HeightModel {
  double mean = 0.0;
  double sd = 1.0;
};

struct ClickCoefficients {
  double relevance = 1.0;        // a_rel
  double position = 0.0;         // b_pos, multiplies 1/log2(rank+1)
  std::vector<double> media;     // d_media, one per media type
  double height = 0.0;           // e_height, multiplies standardized height
  double bias = 0.0;             // b0
};

// How the ranker-visible document features are produced. Column 0 is a
// noisy relevance signal; column 1 (when dim >= 2) carries `score_leak` of
// the logging ranker's error, standardized; remaining columns are noise.
struct DocFeatureModel {
  int dim = 4;
  double relevance_noise_sd = 0.5;
  double score_leak = 0.9;
};

enum class MaxHeightMode { kRunning, kPage };

struct ScmConfig {
  int n_queries = 1000;
  int docs_per_query = 10;
  std::array<double, kMaxGrade + 1> relevance_prior{0.2, 0.2, 0.2, 0.2, 0.2};
  double score_noise_sd = 1.0;
  // sd of exploration noise added to r_hat before ranking; 0 ranks by r_hat.
  double rank_noise_sd = 0.0;
  // kScoreBins rows (equal-probability bins of the logged score, lowest
  // first), one column per media type.
  std::vector<std::vector<double>> media_given_score;
  std::vector<HeightModel> height_given_media;
  ClickCoefficients click;
  DocFeatureModel doc_features;
  MaxHeightMode max_height_mode = MaxHeightMode::kPage;
  std::uint64_t seed = 0;

  int num_media() const { return static_cast<int>(height_given_media.size()); }
  // Throws ConfigError naming the offending field.
  void validate() const;

  // Position and media effects on click, media tied to the logged score.
  static ScmConfig default_biased();
  // Same generating process with every SEPP click coefficient zeroed.
  static ScmConfig unconfounded();
};

ScmConfig scm_config_from_json(const Json& j);
Json scm_config_to_json(const ScmConfig& config);

struct GroundTruth {
  CausalGraph graph;
  std::vector<int> true_relevance;  // in log record order
  std::string click_model;          // human-readable click expression
};

FeatureSchema simulator_schema(const ScmConfig& config);

// Monotone exposure curve used by the click expression: 1/log2(rank+1).
double position_score(int rank);

// Upper edges of the equal-probability bins of the logged score; the last
// edge is +inf.
std::array<double, kScoreBins> score_bin_edges(const ScmConfig& config);
// Population mean and sd of the height marginal, used to standardize height.
std::pair<double, double> height_moments(const ScmConfig& config);

// Queries are generated independently from seeds split by query index, so
// `jobs` only changes wall time.
std::pair<ClickLog, GroundTruth> generate(const ScmConfig& config, int jobs = 1);

CausalGraph ground_truth_graph(const ScmConfig& config);

// Bucket 0 holds the most frequent queries; ties broken by query_id.
ClickLog assign_frequency_buckets(const ClickLog& log, int n_buckets);

}  // namespace wpultr

#endif  // WPULTR_SIMULATE_HPP_
