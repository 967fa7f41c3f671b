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

#include "wpultr/causal.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <mutex>
#include <thread>

namespace wpultr {

NodeData node_data(const DesignMatrix& z) {
  NodeData d;
  for (const auto& node : z.layout.nodes()) {
    d.labels.push_back(node.label);
    d.blocks.push_back(z.values.middleCols(node.begin, node.width));
  }
  return d;
}

const std::vector<std::size_t>* Skeleton::sepset(std::size_t a, std::size_t b) const {
  const auto it = sepsets.find({std::min(a, b), std::max(a, b)});
  return it == sepsets.end() ? nullptr : &it->second;
}

namespace {

// All size-k subsets of `pool` (already sorted) in lexicographic order.
std::vector<std::vector<std::size_t>> combinations(const std::vector<std::size_t>& pool,
                                                   std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > pool.size()) return out;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    std::vector<std::size_t> s(k);
    for (std::size_t i = 0; i < k; ++i) s[i] = pool[pick[i]];
    out.push_back(std::move(s));
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == pool.size() - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

Eigen::MatrixXd stack_blocks(const NodeData& data, const std::vector<std::size_t>& nodes) {
  Eigen::Index cols = 0;
  for (auto v : nodes) cols += data.blocks[v].cols();
  Eigen::MatrixXd out(data.rows(), cols);
  Eigen::Index at = 0;
  for (auto v : nodes) {
    out.middleCols(at, data.blocks[v].cols()) = data.blocks[v];
    at += data.blocks[v].cols();
  }
  return out;
}

struct EdgeOutcome {
  bool removed = false;
  std::vector<std::size_t> sepset;
  std::vector<CiRecord> tests;
};

EdgeOutcome test_edge(const NodeData& data, std::size_t a, std::size_t b,
                      const std::vector<std::vector<std::size_t>>& adj, std::size_t depth,
                      const PcOptions& options) {
  EdgeOutcome out;
  std::set<std::vector<std::size_t>> tried;
  for (const auto& [from, other] : {std::pair{a, b}, std::pair{b, a}}) {
    std::vector<std::size_t> pool;
    for (auto v : adj[from]) {
      if (v != other) pool.push_back(v);
    }
    for (auto& s : combinations(pool, depth)) {
      if (!tried.insert(s).second) continue;
      const KciResult r =
          kci_test(data.blocks[a], data.blocks[b], stack_blocks(data, s), options.kci);
      CiRecord rec;
      rec.x = data.labels[a];
      rec.y = data.labels[b];
      for (auto v : s) rec.given.push_back(data.labels[v]);
      rec.statistic = r.statistic;
      rec.p_value = r.p_value;
      rec.degenerate = r.degenerate;
      out.tests.push_back(std::move(rec));
      if (r.p_value > options.alpha) {
        out.removed = true;
        out.sepset = s;
        return out;
      }
    }
  }
  return out;
}

}  // namespace

Skeleton pc_skeleton(const NodeData& data, const PcOptions& options) {
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
    throw std::invalid_argument("pc_skeleton: alpha must lie in (0, 1)");
  }
  const std::size_t k = data.size();
  Skeleton sk;
  sk.graph = CausalGraph(data.labels);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) sk.graph.add_undirected(data.labels[i], data.labels[j]);
  }
  for (std::size_t depth = 0;; ++depth) {
    if (options.max_depth >= 0 && depth > static_cast<std::size_t>(options.max_depth)) break;
    std::vector<std::vector<std::size_t>> adj(k);
    bool any = false;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i != j && sk.graph.adjacent(i, j)) adj[i].push_back(j);
      }
      if (adj[i].size() >= depth + 1) any = true;
    }
    if (!any) break;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        if (sk.graph.adjacent(i, j)) edges.emplace_back(i, j);
      }
    }
    std::vector<EdgeOutcome> outcomes(edges.size());
    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(edges.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (std::size_t e = next++; e < edges.size(); e = next++) {
        try {
          outcomes[e] = test_edge(data, edges[e].first, edges[e].second, adj, depth, options);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    };
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto& o = outcomes[e];
      sk.tests.insert(sk.tests.end(), o.tests.begin(), o.tests.end());
      if (o.removed) {
        sk.graph.remove_edge(data.labels[edges[e].first], data.labels[edges[e].second]);
        sk.sepsets[edges[e]] = o.sepset;
      }
    }
  }
  return sk;
}

bool BackgroundKnowledge::forbids(std::string_view from, std::string_view to) const {
  return std::any_of(forbidden.begin(), forbidden.end(),
                     [&](const auto& f) { return f.first == from && f.second == to; });
}

BackgroundKnowledge ranking_background(const std::vector<std::string>& nodes) {
  BackgroundKnowledge bk;
  const bool has_rel = std::find(nodes.begin(), nodes.end(), kRel) != nodes.end();
  const bool has_click = std::find(nodes.begin(), nodes.end(), kClick) != nodes.end();
  if (has_rel && has_click) bk.required.emplace_back(std::string(kRel), std::string(kClick));
  for (const auto& n : nodes) {
    if (has_click && n != kClick) bk.forbidden.emplace_back(std::string(kClick), n);
    if (has_rel && n != kRel) bk.forbidden.emplace_back(n, std::string(kRel));
  }
  return bk;
}

namespace {

std::string arrow(const std::string& a, const std::string& b) { return a + "→" + b; }

class Orienter {
 public:
  Orienter(CausalGraph g, const BackgroundKnowledge& bk, bool strict)
      : g_(std::move(g)), bk_(bk), strict_(strict) {}

  void apply_background() {
    for (const auto& [from, to] : bk_.required) {
      if (!g_.has_node(from) || !g_.has_node(to)) continue;
      if (g_.directed(from, to)) continue;
      try {
        if (g_.adjacent(from, to)) {
          g_.orient(from, to);
        } else {
          g_.add_directed(from, to);
        }
      } catch (const GraphError&) {
        bk_conflict("required edge " + arrow(from, to) + " closes a cycle");
      }
    }
    for (const auto& e : g_.edges()) {
      if (e.mark != CausalGraph::Mark::kUndirected) continue;
      const bool ab = bk_.forbids(e.from, e.to);
      const bool ba = bk_.forbids(e.to, e.from);
      if (ab && ba) {
        bk_conflict("edge " + e.from + "—" + e.to + " is forbidden in both directions");
      } else if (ab) {
        set_direction(e.to, e.from, true);
      } else if (ba) {
        set_direction(e.from, e.to, true);
      }
    }
  }

  void apply_colliders(const Skeleton& sk) {
    const std::size_t k = g_.num_nodes();
    const auto& names = g_.nodes();
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
          if (a == c || b == c) continue;
          if (!sk.graph.adjacent(a, c) || !sk.graph.adjacent(b, c) || sk.graph.adjacent(a, b)) {
            continue;
          }
          const auto* s = sk.sepset(a, b);
          if (s == nullptr || std::find(s->begin(), s->end(), c) != s->end()) continue;
          for (std::size_t v : {a, b}) {
            if (!g_.adjacent(v, c)) continue;
            if (g_.directed(v, c)) continue;
            if (g_.directed(c, v)) {
              const std::string msg = "collider " + names[a] + "→" + names[c] + "←" + names[b] +
                                      " contradicts " + arrow(names[c], names[v]);
              if (fixed_.count({c, v})) {
                bk_conflict(msg);
              } else {
                conflicts_.push_back(msg);
              }
              continue;
            }
            if (bk_.forbids(names[v], names[c])) {
              bk_conflict("collider " + names[a] + "→" + names[c] + "←" + names[b] +
                          " needs forbidden " + arrow(names[v], names[c]));
              continue;
            }
            if (!try_orient(v, c)) {
              conflicts_.push_back("collider edge " + arrow(names[v], names[c]) +
                                   " closes a cycle");
            }
          }
        }
      }
    }
  }

  void apply_meek() {
    const std::size_t k = g_.num_nodes();
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          if (a == b || !g_.undirected(a, b)) continue;
          if (meek_applies(a, b) && try_orient(a, b)) changed = true;
        }
      }
    }
  }

  OrientResult result() && { return {std::move(g_), std::move(conflicts_)}; }

 private:
  bool meek_applies(std::size_t a, std::size_t b) const {
    const std::size_t k = g_.num_nodes();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == a || c == b) continue;
      // R1: c -> a - b, c and b nonadjacent.
      if (g_.directed(c, a) && !g_.adjacent(c, b)) return true;
      // R2: a -> c -> b.
      if (g_.directed(a, c) && g_.directed(c, b)) return true;
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t d = c + 1; d < k; ++d) {
        if (c == a || c == b || d == a || d == b) continue;
        // R3: a - c -> b, a - d -> b, c and d nonadjacent.
        if (g_.undirected(a, c) && g_.undirected(a, d) && g_.directed(c, b) &&
            g_.directed(d, b) && !g_.adjacent(c, d)) {
          return true;
        }
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t d = 0; d < k; ++d) {
        if (c == d || c == a || c == b || d == a || d == b) continue;
        // R4: a ~ c -> d -> b, a ~ d, c and b nonadjacent.
        if (g_.adjacent(a, c) && g_.directed(c, d) && g_.directed(d, b) && g_.adjacent(a, d) &&
            !g_.adjacent(c, b)) {
          return true;
        }
      }
    }
    return false;
  }

  bool try_orient(std::size_t from, std::size_t to) {
    const auto& names = g_.nodes();
    if (bk_.forbids(names[from], names[to])) return false;
    try {
      g_.orient(names[from], names[to]);
      return true;
    } catch (const GraphError&) {
      return false;
    }
  }

  void set_direction(const std::string& from, const std::string& to, bool fixed) {
    try {
      g_.orient(from, to);
      if (fixed) fixed_.insert({g_.index(from), g_.index(to)});
    } catch (const GraphError&) {
      bk_conflict("background edge " + arrow(from, to) + " closes a cycle");
    }
  }

  void bk_conflict(const std::string& msg) {
    if (strict_) throw OrientationConflict("orientation conflict: " + msg);
    conflicts_.push_back(msg);
  }

  CausalGraph g_;
  const BackgroundKnowledge& bk_;
  bool strict_;
  std::set<std::pair<std::size_t, std::size_t>> fixed_;
  std::vector<std::string> conflicts_;
};

}  // namespace

OrientResult orient(const Skeleton& skeleton, const BackgroundKnowledge& knowledge,
                    bool strict) {
  Orienter o(skeleton.graph, knowledge, strict);
  o.apply_background();
  o.apply_colliders(skeleton);
  o.apply_meek();
  return std::move(o).result();
}

CausalGraph background_cpdag(const CausalGraph& dag, const BackgroundKnowledge& knowledge) {
  const std::size_t k = dag.num_nodes();
  Skeleton sk;
  sk.graph = CausalGraph(dag.nodes());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (dag.adjacent(i, j)) sk.graph.add_undirected(dag.nodes()[i], dag.nodes()[j]);
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (dag.adjacent(a, b)) continue;
      std::vector<std::size_t> s;
      for (std::size_t c = 0; c < k; ++c) {
        if (c == a || c == b || !dag.adjacent(a, c) || !dag.adjacent(b, c)) continue;
        if (!(dag.directed(a, c) && dag.directed(b, c))) s.push_back(c);
      }
      sk.sepsets[{a, b}] = s;
    }
  }
  return orient(sk, knowledge, false).graph;
}

BiasClasses classify_biases(const CausalGraph& graph) {
  if (!graph.has_node(kRel) || !graph.has_node(kClick)) {
    throw GraphError("classify_biases: graph needs REL and CLICK nodes");
  }
  BiasClasses out;
  for (const auto& x : graph.nodes()) {
    if (x == kRel || x == kClick) continue;
    if (graph.directed(kRel, x) && graph.has_directed_path(x, kClick)) {
      out.confounding.push_back(x);
    }
    if (graph.directed(x, kClick)) out.sepp_bias.push_back(x);
  }
  for (const auto& e : graph.edges()) {
    if (e.mark == CausalGraph::Mark::kUndirected) out.undirected.emplace_back(e.from, e.to);
  }
  return out;
}

int structural_hamming_distance(const CausalGraph& a, const CausalGraph& b) {
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  if (sorted(a.nodes()) != sorted(b.nodes())) {
    throw GraphError("structural_hamming_distance: node sets differ");
  }
  const std::size_t k = a.num_nodes();
  std::vector<std::size_t> map(k);
  for (std::size_t i = 0; i < k; ++i) map[i] = b.index(a.nodes()[i]);
  int d = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (a.mark(i, j) != b.mark(map[i], map[j]) || a.mark(j, i) != b.mark(map[j], map[i])) ++d;
    }
  }
  return d;
}

Json graph_to_json(const CausalGraph& graph) {
  Json edges = Json::array();
  for (const auto& e : graph.edges()) {
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"mark", e.mark == CausalGraph::Mark::kDirected ? "directed" : "undirected"}});
  }
  return Json{{"nodes", graph.nodes()}, {"edges", edges}};
}

CausalGraph graph_from_json(const Json& j) {
  CausalGraph g(json_require<std::vector<std::string>>(j, "nodes", "graph"));
  if (!j.contains("edges")) return g;
  for (const auto& e : j.at("edges")) {
    const auto from = json_require<std::string>(e, "from", "graph.edges");
    const auto to = json_require<std::string>(e, "to", "graph.edges");
    const auto mark = json_get<std::string>(e, "mark", "graph.edges", "directed");
    if (mark == "directed") {
      g.add_directed(from, to);
    } else if (mark == "undirected") {
      g.add_undirected(from, to);
    } else {
      throw ConfigError("graph.edges.mark: expected directed or undirected, got " + mark);
    }
  }
  return g;
}

std::vector<std::string> graph_diff(const CausalGraph& before, const CausalGraph& after) {
  auto render = [](const CausalGraph& g) {
    std::vector<std::string> out;
    for (const auto& e : g.edges()) {
      out.push_back(e.from + (e.mark == CausalGraph::Mark::kDirected ? "→" : "—") + e.to);
    }
    return out;
  };
  const auto a = render(before);
  const auto b = render(after);
  std::vector<std::string> diff;
  for (const auto& e : a) {
    if (std::find(b.begin(), b.end(), e) == b.end()) diff.push_back("− " + e);
  }
  for (const auto& e : b) {
    if (std::find(a.begin(), a.end(), e) == a.end()) diff.push_back("+ " + e);
  }
  return diff;
}

void append_snapshot(const std::string& path, const GraphSnapshot& snapshot) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::app);
  if (!out) throw IoError("cannot open snapshot stream " + path);
  Json j = graph_to_json(snapshot.graph);
  j["step"] = snapshot.step;
  out << j.dump() << '\n';
  if (!out) throw IoError("cannot write snapshot stream " + path);
}

std::vector<GraphSnapshot> read_snapshots(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<GraphSnapshot> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line);
    out.push_back({json_require<std::int64_t>(j, "step", "snapshot"), graph_from_json(j)});
  }
  return out;
}

NodeData restrict_nodes(const NodeData& data, const std::vector<std::string>& keep) {
  NodeData out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (std::find(keep.begin(), keep.end(), data.labels[i]) != keep.end()) {
      out.labels.push_back(data.labels[i]);
      out.blocks.push_back(data.blocks[i]);
    }
  }
  return out;
}

DiscoveryResult discover(const DesignMatrix& z, const PcOptions& options, bool strict) {
  return discover(node_data(z), options, strict);
}

DiscoveryResult discover(const NodeData& data, const PcOptions& options, bool strict) {
  DiscoveryResult d;
  d.skeleton = pc_skeleton(data, options);
  auto o = orient(d.skeleton, ranking_background(data.labels), strict);
  d.graph = std::move(o.graph);
  d.conflicts = std::move(o.conflicts);
  d.biases = classify_biases(d.graph);
  return d;
}

}  // namespace wpultr
