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

#ifndef WPULTR_EVAL_HPP_
#define WPULTR_EVAL_HPP_

#include <Eigen/Core>

#include <string>
#include <vector>

#include "wpultr/core.hpp"

namespace wpultr {

// Gain 2^g - 1, discount log2(i + 1), i 1-based.
double dcg_at_k(const std::vector<int>& grades, int k);
// R_g = (2^g - 1) / 16.
double err_at_k(const std::vector<int>& grades, int k);
// 1 when the ideal DCG is 0.
double ndcg_at_k(const std::vector<int>& grades, int k);
// Tau-b with ties in either list; 0 when either list is constant. Throws
// std::invalid_argument on fewer than 2 items or a length mismatch.
double kendall_tau(const std::vector<double>& scores, const std::vector<double>& grades);

struct RankedQuery {
  std::string query_id;
  std::vector<std::string> doc_ids;  // descending score, ties by doc_id
  std::vector<int> grades;
  std::vector<double> scores;
  int bucket = kNoBucket;
};

// Throws SchemaError naming true_relevance when a record is unlabeled.
std::vector<RankedQuery> rank_queries(const ClickLog& log, const Eigen::VectorXd& scores);

// Mean per-query tau-b; queries whose grades are all equal are skipped.
double mean_kendall_tau(const std::vector<RankedQuery>& queries);

struct MetricRow {
  std::string method;
  std::string metric;
  int cutoff = 0;
  std::string partition;
  double mean = 0.0;
  double sd = 0.0;  // sample sd across queries
  std::size_t n_queries = 0;
};

// DCG, ERR and nDCG at each cutoff over every query ("all").
std::vector<MetricRow> metric_report(const std::string& method,
                                     const std::vector<RankedQuery>& queries,
                                     const std::vector<int>& cutoffs);
// Same metrics split into High (buckets 0-4) and Tail (5-9). Empty
// partitions are left out.
std::vector<MetricRow> bucket_report(const std::string& method,
                                     const std::vector<RankedQuery>& queries,
                                     const std::vector<int>& cutoffs);

std::string metric_csv(const std::vector<MetricRow>& rows);

struct PositionShift {
  int orig_pos = 0;
  double mean_new_pos = 0.0;
  double sd = 0.0;  // population sd
  std::size_t n = 0;
};

// Doc ids per query in original and new order. Throws std::invalid_argument
// when a query's doc sets differ.
std::vector<PositionShift> rerank_position_analysis(
    const std::vector<std::vector<std::string>>& original,
    const std::vector<std::vector<std::string>>& reranked, int max_pos = 10);
// Original order is the logged rank_position; new order comes from scores.
std::vector<PositionShift> rerank_position_analysis(const ClickLog& log,
                                                    const Eigen::VectorXd& scores,
                                                    int max_pos = 10);

std::string position_csv(const std::vector<PositionShift>& rows);

}  // namespace wpultr

#endif  // WPULTR_EVAL_HPP_
