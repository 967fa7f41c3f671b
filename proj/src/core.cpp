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

#include "wpultr/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace wpultr {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kContinuous:
      return "continuous";
    case FeatureKind::kOrdinal:
      return "ordinal";
    case FeatureKind::kCategorical:
      return "categorical";
  }
  return "continuous";
}

FeatureKind feature_kind_from_string(std::string_view text) {
  if (text == "continuous") return FeatureKind::kContinuous;
  if (text == "ordinal") return FeatureKind::kOrdinal;
  if (text == "categorical") return FeatureKind::kCategorical;
  throw SchemaError("unknown feature kind '" + std::string(text) + "'");
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> entries)
    : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.name.empty()) throw SchemaError("feature name must be non-empty");
    if (e.name == kRel || e.name == kClick) {
      throw SchemaError("feature name '" + e.name + "' is reserved");
    }
    if (!seen.insert(e.name).second) {
      throw SchemaError("duplicate feature name '" + e.name + "'");
    }
    if (e.discrete() && e.cardinality < 2) {
      throw SchemaError("feature '" + e.name + "' needs cardinality >= 2");
    }
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

const FeatureSpec& FeatureSchema::at(std::string_view name) const {
  const auto i = index_of(name);
  if (!i) throw SchemaError("no feature named '" + std::string(name) + "'");
  return entries_[*i];
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

bool ImpressionRecord::operator==(const ImpressionRecord& other) const {
  return query_id == other.query_id && doc_id == other.doc_id &&
         rank_position == other.rank_position && sepp == other.sepp &&
         doc_features.size() == other.doc_features.size() &&
         doc_features == other.doc_features && click == other.click &&
         true_relevance == other.true_relevance &&
         freq_bucket == other.freq_bucket && logged_score == other.logged_score;
}

Eigen::Index ClickLog::doc_feature_dim() const {
  return records_.empty() ? 0 : records_.front().doc_features.size();
}

double ClickLog::sepp_value(std::size_t record, std::string_view feature) const {
  const auto i = schema_.index_of(feature);
  if (!i) throw SchemaError("no feature named '" + std::string(feature) + "'");
  return records_.at(record).sepp[*i];
}

ClickLog group_queries(FeatureSchema schema, std::vector<ImpressionRecord> records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].sepp.size() != schema.size()) {
      throw SchemaError("record " + std::to_string(i) + " has " +
                        std::to_string(records[i].sepp.size()) +
                        " SEPP values, schema declares " +
                        std::to_string(schema.size()));
    }
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const ImpressionRecord& a, const ImpressionRecord& b) {
                     return std::tie(a.query_id, a.rank_position, a.doc_id) <
                            std::tie(b.query_id, b.rank_position, b.doc_id);
                   });
  ClickLog log;
  log.schema_ = std::move(schema);
  log.records_ = std::move(records);
  for (std::size_t i = 0; i < log.records_.size();) {
    std::size_t j = i;
    while (j < log.records_.size() &&
           log.records_[j].query_id == log.records_[i].query_id) {
      ++j;
    }
    log.groups_.push_back({log.records_[i].query_id, i, j});
    i = j;
  }
  return log;
}

ClickLog group_queries(std::span<const ClickLog> parts) {
  if (parts.empty()) return {};
  std::vector<ImpressionRecord> all;
  for (const auto& part : parts) {
    if (!(part.schema() == parts.front().schema())) {
      throw SchemaError("schema mismatch between click log parts");
    }
    all.insert(all.end(), part.records().begin(), part.records().end());
  }
  return group_queries(parts.front().schema(), std::move(all));
}

std::vector<Violation> validate_log(const ClickLog& log) {
  std::vector<Violation> out;
  const auto& schema = log.schema();
  const auto& recs = log.records();
  const Eigen::Index dim = log.doc_feature_dim();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    if (r.query_id.empty()) out.push_back({i, "query_id non-empty"});
    if (r.doc_id.empty()) out.push_back({i, "doc_id non-empty"});
    if (r.rank_position < 1) out.push_back({i, "rank_position >= 1"});
    if (r.click != 0 && r.click != 1) out.push_back({i, "click in {0,1}"});
    if (r.true_relevance != kUnlabeled &&
        (r.true_relevance < 0 || r.true_relevance > kMaxGrade)) {
      out.push_back({i, "true_relevance in {0..4} or absent"});
    }
    if (r.freq_bucket != kNoBucket &&
        (r.freq_bucket < 0 || r.freq_bucket >= kNumFrequencyBuckets)) {
      out.push_back({i, "freq_bucket in {0..9} or absent"});
    }
    if (r.doc_features.size() != dim) {
      out.push_back({i, "doc_features length consistent across records"});
    }
    if (!r.doc_features.allFinite()) out.push_back({i, "doc_features finite"});
    if (r.logged_score && !std::isfinite(*r.logged_score)) {
      out.push_back({i, "logged_score finite"});
    }
    if (r.sepp.size() != schema.size()) {
      out.push_back({i, "sepp_values keys match schema"});
      continue;
    }
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto& spec = schema[f];
      const double v = r.sepp[f];
      if (!std::isfinite(v)) {
        out.push_back({i, spec.name + " finite"});
        continue;
      }
      if (spec.kind == FeatureKind::kCategorical &&
          (v != std::floor(v) || v < 0 || v >= spec.cardinality)) {
        out.push_back({i, spec.name + " in [0, cardinality)"});
      } else if (spec.kind == FeatureKind::kOrdinal &&
                 (v != std::floor(v) || v < 1 || v > spec.cardinality)) {
        out.push_back({i, spec.name + " in [1, cardinality]"});
      }
    }
  }
  for (const auto& g : log.groups()) {
    std::set<int> positions;
    for (std::size_t i = g.begin; i < g.end; ++i) {
      if (recs[i].query_id != g.query_id) {
        out.push_back({i, "query group contiguous"});
      }
      if (i > g.begin && recs[i].rank_position < recs[i - 1].rank_position) {
        out.push_back({i, "query group sorted by rank_position"});
      }
      if (!positions.insert(recs[i].rank_position).second) {
        out.push_back({i, "rank_position unique within query"});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.record, a.rule) < std::tie(b.record, b.rule);
  });
  return out;
}

// ---------------------------------------------------------------------------
// CausalGraph

CausalGraph::CausalGraph(std::vector<std::string> nodes) {
  for (auto& label : nodes) add_node(label);
}

bool CausalGraph::has_node(std::string_view label) const {
  return std::find(nodes_.begin(), nodes_.end(), label) != nodes_.end();
}

std::size_t CausalGraph::index(std::string_view label) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), label);
  if (it == nodes_.end()) {
    throw GraphError("unknown node '" + std::string(label) + "'");
  }
  return static_cast<std::size_t>(it - nodes_.begin());
}

void CausalGraph::add_node(const std::string& label) {
  if (label.empty()) throw GraphError("node label must be non-empty");
  if (has_node(label)) throw GraphError("duplicate node '" + label + "'");
  const std::size_t old = n();
  std::vector<Mark> grown((old + 1) * (old + 1), Mark::kNone);
  for (std::size_t i = 0; i < old; ++i) {
    for (std::size_t j = 0; j < old; ++j) grown[i * (old + 1) + j] = marks_[i * old + j];
  }
  marks_ = std::move(grown);
  nodes_.push_back(label);
}

bool CausalGraph::path_exists(std::size_t from, std::size_t to) const {
  std::vector<char> seen(n(), 0);
  std::vector<std::size_t> stack{from};
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (u == to) return true;
    if (seen[u]) continue;
    seen[u] = 1;
    for (std::size_t v = 0; v < n(); ++v) {
      if (directed(u, v) && !seen[v]) stack.push_back(v);
    }
  }
  return false;
}

void CausalGraph::add_directed(std::string_view from, std::string_view to) {
  const std::size_t i = index(from);
  const std::size_t j = index(to);
  if (i == j) throw GraphError("self-loop on '" + std::string(from) + "'");
  if (adjacent(i, j)) {
    throw GraphError("edge between '" + std::string(from) + "' and '" +
                     std::string(to) + "' already exists");
  }
  if (path_exists(j, i)) {
    throw GraphError("edge " + std::string(from) + "->" + std::string(to) +
                     " would create a directed cycle");
  }
  set(i, j, Mark::kDirected);
}

void CausalGraph::add_undirected(std::string_view a, std::string_view b) {
  const std::size_t i = index(a);
  const std::size_t j = index(b);
  if (i == j) throw GraphError("self-loop on '" + std::string(a) + "'");
  if (adjacent(i, j)) {
    throw GraphError("edge between '" + std::string(a) + "' and '" +
                     std::string(b) + "' already exists");
  }
  set(i, j, Mark::kUndirected);
  set(j, i, Mark::kUndirected);
}

void CausalGraph::remove_edge(std::string_view a, std::string_view b) {
  const std::size_t i = index(a);
  const std::size_t j = index(b);
  set(i, j, Mark::kNone);
  set(j, i, Mark::kNone);
}

void CausalGraph::orient(std::string_view from, std::string_view to) {
  const std::size_t i = index(from);
  const std::size_t j = index(to);
  if (!adjacent(i, j)) {
    throw GraphError("cannot orient missing edge " + std::string(from) + "-" +
                     std::string(to));
  }
  if (directed(i, j)) return;
  const Mark old_ij = mark(i, j);
  const Mark old_ji = mark(j, i);
  set(i, j, Mark::kNone);
  set(j, i, Mark::kNone);
  if (path_exists(j, i)) {
    set(i, j, old_ij);
    set(j, i, old_ji);
    throw GraphError("orienting " + std::string(from) + "->" + std::string(to) +
                     " would create a directed cycle");
  }
  set(i, j, Mark::kDirected);
}

bool CausalGraph::adjacent(std::string_view a, std::string_view b) const {
  return adjacent(index(a), index(b));
}

bool CausalGraph::directed(std::string_view from, std::string_view to) const {
  return directed(index(from), index(to));
}

bool CausalGraph::undirected(std::string_view a, std::string_view b) const {
  return undirected(index(a), index(b));
}

std::vector<std::string> CausalGraph::parents(std::string_view node) const {
  const std::size_t j = index(node);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n(); ++i) {
    if (directed(i, j)) out.push_back(nodes_[i]);
  }
  return out;
}

std::vector<std::string> CausalGraph::children(std::string_view node) const {
  const std::size_t i = index(node);
  std::vector<std::string> out;
  for (std::size_t j = 0; j < n(); ++j) {
    if (directed(i, j)) out.push_back(nodes_[j]);
  }
  return out;
}

std::vector<std::string> CausalGraph::neighbors(std::string_view node) const {
  const std::size_t i = index(node);
  std::vector<std::string> out;
  for (std::size_t j = 0; j < n(); ++j) {
    if (undirected(i, j)) out.push_back(nodes_[j]);
  }
  return out;
}

std::vector<std::string> CausalGraph::adjacents(std::string_view node) const {
  const std::size_t i = index(node);
  std::vector<std::string> out;
  for (std::size_t j = 0; j < n(); ++j) {
    if (adjacent(i, j)) out.push_back(nodes_[j]);
  }
  return out;
}

std::vector<CausalGraph::Edge> CausalGraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < n(); ++i) {
    for (std::size_t j = 0; j < n(); ++j) {
      if (directed(i, j)) {
        out.push_back({nodes_[i], nodes_[j], Mark::kDirected});
      } else if (i < j && undirected(i, j)) {
        out.push_back({nodes_[i], nodes_[j], Mark::kUndirected});
      }
    }
  }
  return out;
}

std::size_t CausalGraph::num_edges() const { return edges().size(); }

bool CausalGraph::is_acyclic() const {
  // Kahn's algorithm over the directed part.
  std::vector<int> indegree(n(), 0);
  for (std::size_t i = 0; i < n(); ++i) {
    for (std::size_t j = 0; j < n(); ++j) indegree[j] += directed(i, j) ? 1 : 0;
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n(); ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::size_t u = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t v = 0; v < n(); ++v) {
      if (directed(u, v) && --indegree[v] == 0) ready.push_back(v);
    }
  }
  return visited == n();
}

bool CausalGraph::has_directed_path(std::string_view from, std::string_view to) const {
  const std::size_t i = index(from);
  const std::size_t j = index(to);
  if (i == j) return false;
  return path_exists(i, j);
}

}  // namespace wpultr
