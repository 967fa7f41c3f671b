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

#ifndef WPULTR_CORE_HPP_
#define WPULTR_CORE_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wpultr {

// Reserved node labels. SEPP feature names may not collide with these.
inline constexpr std::string_view kRel = "REL";
inline constexpr std::string_view kClick = "CLICK";

// Sentinels for absent annotations. Grade 0 ("bad") is a real label.
inline constexpr int kUnlabeled = -1;
inline constexpr int kNoBucket = -1;
inline constexpr int kMaxGrade = 4;
inline constexpr int kNumFrequencyBuckets = 10;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FeatureKind { kContinuous, kOrdinal, kCategorical };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view text);

// Categorical levels are 0-based codes in [0, cardinality). Ordinal levels
// are rank-like and 1-based, in [1, cardinality] (level 1 is the best).
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  int cardinality = 0;

  bool discrete() const { return kind != FeatureKind::kContinuous; }
  bool operator==(const FeatureSpec&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws SchemaError on empty, duplicate or reserved names, or on a
  // discrete entry with cardinality < 2.
  explicit FeatureSchema(std::vector<FeatureSpec> entries);

  const std::vector<FeatureSpec>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const FeatureSpec& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  const FeatureSpec& at(std::string_view name) const;
  std::vector<std::string> names() const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<FeatureSpec> entries_;
};

// One displayed document for one query. `sepp` holds the presentation
// feature values in schema order; discrete levels are stored as integral
// doubles. `logged_score` is the score of the ranker that produced the
// page, when the log carries it.
struct ImpressionRecord {
  std::string query_id;
  std::string doc_id;
  int rank_position = 1;
  std::vector<double> sepp;
  Eigen::VectorXd doc_features;
  int click = 0;
  int true_relevance = kUnlabeled;
  int freq_bucket = kNoBucket;
  std::optional<double> logged_score;

  bool labeled() const { return true_relevance != kUnlabeled; }
  bool operator==(const ImpressionRecord& other) const;
};

struct QueryGroup {
  std::string query_id;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const QueryGroup&) const = default;
};

// Records are sorted by (query_id, rank_position, doc_id); each query is a
// contiguous span described by `groups()`. Immutable once built.
class ClickLog {
 public:
  ClickLog() = default;

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<ImpressionRecord>& records() const { return records_; }
  const std::vector<QueryGroup>& groups() const { return groups_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const ImpressionRecord& operator[](std::size_t i) const { return records_[i]; }

  std::span<const ImpressionRecord> group_records(const QueryGroup& g) const {
    return std::span<const ImpressionRecord>(records_).subspan(g.begin, g.size());
  }
  Eigen::Index doc_feature_dim() const;
  double sepp_value(std::size_t record, std::string_view feature) const;

  bool operator==(const ClickLog&) const = default;

 private:
  friend ClickLog group_queries(FeatureSchema schema,
                                std::vector<ImpressionRecord> records);
  FeatureSchema schema_;
  std::vector<ImpressionRecord> records_;
  std::vector<QueryGroup> groups_;
};

// Sorts and groups records by query. Throws SchemaError when a record's
// SEPP vector does not match the schema width.
ClickLog group_queries(FeatureSchema schema, std::vector<ImpressionRecord> records);
// Concatenates logs that share one schema; throws SchemaError otherwise.
ClickLog group_queries(std::span<const ClickLog> parts);

struct Violation {
  std::size_t record = 0;
  std::string rule;
};

std::vector<Violation> validate_log(const ClickLog& log);

// Mixed directed/undirected graph over string-labelled nodes. The directed
// part is kept acyclic: any mutation that would close a directed cycle
// throws GraphError and leaves the graph unchanged.
class CausalGraph {
 public:
  enum class Mark : std::uint8_t { kNone = 0, kDirected = 1, kUndirected = 2 };

  struct Edge {
    std::string from;
    std::string to;
    Mark mark = Mark::kDirected;
    bool operator==(const Edge&) const = default;
  };

  CausalGraph() = default;
  explicit CausalGraph(std::vector<std::string> nodes);

  const std::vector<std::string>& nodes() const { return nodes_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  bool has_node(std::string_view label) const;
  std::size_t index(std::string_view label) const;
  void add_node(const std::string& label);

  void add_directed(std::string_view from, std::string_view to);
  void add_undirected(std::string_view a, std::string_view b);
  void remove_edge(std::string_view a, std::string_view b);
  // Turns an existing edge (either mark) into from -> to.
  void orient(std::string_view from, std::string_view to);

  bool adjacent(std::string_view a, std::string_view b) const;
  bool directed(std::string_view from, std::string_view to) const;
  bool undirected(std::string_view a, std::string_view b) const;

  std::vector<std::string> parents(std::string_view node) const;
  std::vector<std::string> children(std::string_view node) const;
  std::vector<std::string> neighbors(std::string_view node) const;  // undirected
  std::vector<std::string> adjacents(std::string_view node) const;

  // Edges sorted by (from index, to index); undirected edges listed once with
  // the lower node index first.
  std::vector<Edge> edges() const;
  std::size_t num_edges() const;
  bool is_acyclic() const;
  bool has_directed_path(std::string_view from, std::string_view to) const;

  bool operator==(const CausalGraph&) const = default;

  // Index-level access for graph algorithms.
  Mark mark(std::size_t i, std::size_t j) const { return marks_[i * n() + j]; }
  bool adjacent(std::size_t i, std::size_t j) const {
    return mark(i, j) != Mark::kNone || mark(j, i) != Mark::kNone;
  }
  bool directed(std::size_t i, std::size_t j) const {
    return mark(i, j) == Mark::kDirected;
  }
  bool undirected(std::size_t i, std::size_t j) const {
    return mark(i, j) == Mark::kUndirected;
  }

 private:
  std::size_t n() const { return nodes_.size(); }
  void set(std::size_t i, std::size_t j, Mark m) { marks_[i * n() + j] = m; }
  bool path_exists(std::size_t from, std::size_t to) const;

  std::vector<std::string> nodes_;
  // marks_[i*n+j] == kDirected means i -> j; undirected edges are stored
  // symmetrically.
  std::vector<Mark> marks_;
};

}  // namespace wpultr

#endif  // WPULTR_CORE_HPP_
