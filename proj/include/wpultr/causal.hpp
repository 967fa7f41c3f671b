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

#ifndef WPULTR_CAUSAL_HPP_
#define WPULTR_CAUSAL_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wpultr/core.hpp"
#include "wpultr/json_io.hpp"
#include "wpultr/kci.hpp"
#include "wpultr/preprocess.hpp"

namespace wpultr {

// One variable block per node, in node order.
struct NodeData {
  std::vector<std::string> labels;
  std::vector<Eigen::MatrixXd> blocks;

  std::size_t size() const { return labels.size(); }
  Eigen::Index rows() const { return blocks.empty() ? 0 : blocks[0].rows(); }
};

// Splits a design matrix into its node blocks (layout order).
NodeData node_data(const DesignMatrix& z);

struct CiRecord {
  std::string x;
  std::string y;
  std::vector<std::string> given;
  double statistic = 0.0;
  double p_value = 1.0;
  bool degenerate = false;
};

struct PcOptions {
  double alpha = 0.05;
  int max_depth = -1;  // largest conditioning set size; -1 means unbounded
  int jobs = 1;
  KciOptions kci;
};

struct Skeleton {
  CausalGraph graph;  // undirected edges only
  // Keyed by (lower node index, higher node index).
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> sepsets;
  std::vector<CiRecord> tests;

  const std::vector<std::size_t>* sepset(std::size_t a, std::size_t b) const;
};

// Order-independent (stable) PC adjacency search. Conditioning sets of each
// size are tried in lexicographic order of node indices; the first set with
// p > alpha removes the edge and is recorded as its separating set. Results
// do not depend on `jobs`.
Skeleton pc_skeleton(const NodeData& data, const PcOptions& options);

// Required edges must be present with the given direction; forbidden
// directions may not appear.
struct BackgroundKnowledge {
  std::vector<std::pair<std::string, std::string>> required;
  std::vector<std::pair<std::string, std::string>> forbidden;

  bool forbids(std::string_view from, std::string_view to) const;
};

// REL -> CLICK required; nothing may point into REL or out of CLICK.
BackgroundKnowledge ranking_background(const std::vector<std::string>& nodes);

class OrientationConflict : public GraphError {
 public:
  using GraphError::GraphError;
};

struct OrientResult {
  CausalGraph graph;
  std::vector<std::string> conflicts;
};

// Background knowledge first, then unshielded colliders, then Meek rules
// R1-R4 to a fixed point. In strict mode a collider that contradicts the
// background knowledge (or would close a cycle) throws OrientationConflict;
// otherwise the background orientation is kept and the conflict recorded.
OrientResult orient(const Skeleton& skeleton, const BackgroundKnowledge& knowledge,
                    bool strict = true);

// The pattern a perfect oracle would return for `dag` under `knowledge`.
CausalGraph background_cpdag(const CausalGraph& dag, const BackgroundKnowledge& knowledge);

struct BiasClasses {
  std::vector<std::string> confounding;  // REL -> x and x ~> CLICK
  std::vector<std::string> sepp_bias;    // x -> CLICK, x != REL
  std::vector<std::pair<std::string, std::string>> undirected;
};

BiasClasses classify_biases(const CausalGraph& graph);

// Number of unordered node pairs whose edge status differs (absent,
// undirected, or one of the two directions). Both graphs must share the
// node set; node order may differ.
int structural_hamming_distance(const CausalGraph& a, const CausalGraph& b);

Json graph_to_json(const CausalGraph& graph);
CausalGraph graph_from_json(const Json& j);

// "+ a→b" / "− a→b" lines; undirected edges print as "a—b".
std::vector<std::string> graph_diff(const CausalGraph& before, const CausalGraph& after);

struct GraphSnapshot {
  std::int64_t step = 0;
  CausalGraph graph;
};

// One JSON object per line: {"step":..,"nodes":[..],"edges":[..]}.
void append_snapshot(const std::string& path, const GraphSnapshot& snapshot);
std::vector<GraphSnapshot> read_snapshots(const std::string& path);

struct DiscoveryResult {
  Skeleton skeleton;
  CausalGraph graph;
  BiasClasses biases;
  std::vector<std::string> conflicts;
};

// Skeleton + orientation with the ranking background knowledge on a
// design matrix.
DiscoveryResult discover(const DesignMatrix& z, const PcOptions& options, bool strict = false);
DiscoveryResult discover(const NodeData& data, const PcOptions& options, bool strict = false);

// Keeps only the listed nodes (in their original order).
NodeData restrict_nodes(const NodeData& data, const std::vector<std::string>& keep);

}  // namespace wpultr

#endif  // WPULTR_CAUSAL_HPP_
