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

#include "wpultr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace wpultr {

double dcg_at_k(const std::vector<int>& grades, int k) {
  const std::size_t m = std::min(grades.size(), static_cast<std::size_t>(std::max(k, 0)));
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    s += (std::exp2(grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  return s;
}

double err_at_k(const std::vector<int>& grades, int k) {
  const std::size_t m = std::min(grades.size(), static_cast<std::size_t>(std::max(k, 0)));
  const double denom = std::exp2(kMaxGrade);
  double s = 0.0;
  double not_stopped = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = (std::exp2(grades[i]) - 1.0) / denom;
    s += not_stopped * r / static_cast<double>(i + 1);
    not_stopped *= 1.0 - r;
  }
  return s;
}

double ndcg_at_k(const std::vector<int>& grades, int k) {
  std::vector<int> ideal = grades;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double best = dcg_at_k(ideal, k);
  if (best <= 0) return 1.0;
  return dcg_at_k(grades, k) / best;
}

double kendall_tau(const std::vector<double>& scores, const std::vector<double>& grades) {
  if (scores.size() != grades.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  if (scores.size() < 2) throw std::invalid_argument("kendall_tau: need at least 2 items");
  double concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      const double dx = scores[i] - scores[j];
      const double dy = grades[i] - grades[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        tie_x += 1;
      } else if (dy == 0) {
        tie_y += 1;
      } else if ((dx > 0) == (dy > 0)) {
        concordant += 1;
      } else {
        discordant += 1;
      }
    }
  }
  const double denom = std::sqrt((concordant + discordant + tie_x) * (concordant + discordant + tie_y));
  if (denom == 0) return 0.0;
  return (concordant - discordant) / denom;
}

std::vector<RankedQuery> rank_queries(const ClickLog& log, const Eigen::VectorXd& scores) {
  if (scores.size() != static_cast<Eigen::Index>(log.size())) {
    throw std::invalid_argument("rank_queries: score vector length mismatch");
  }
  std::vector<RankedQuery> out;
  for (const auto& g : log.groups()) {
    std::vector<std::size_t> idx(g.size());
    std::iota(idx.begin(), idx.end(), g.begin);
    for (auto i : idx) {
      if (!log[i].labeled()) {
        throw SchemaError("record " + std::to_string(i) + " of query " + g.query_id +
                          " has no true_relevance");
      }
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const double sa = scores(static_cast<Eigen::Index>(a));
      const double sb = scores(static_cast<Eigen::Index>(b));
      if (sa != sb) return sa > sb;
      return log[a].doc_id < log[b].doc_id;
    });
    RankedQuery q;
    q.query_id = g.query_id;
    q.bucket = log[g.begin].freq_bucket;
    for (auto i : idx) {
      q.doc_ids.push_back(log[i].doc_id);
      q.grades.push_back(log[i].true_relevance);
      q.scores.push_back(scores(static_cast<Eigen::Index>(i)));
    }
    out.push_back(std::move(q));
  }
  return out;
}

double mean_kendall_tau(const std::vector<RankedQuery>& queries) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& q : queries) {
    if (q.grades.size() < 2) continue;
    if (std::all_of(q.grades.begin(), q.grades.end(), [&](int g) { return g == q.grades[0]; })) {
      continue;
    }
    const std::vector<double> grades(q.grades.begin(), q.grades.end());
    sum += kendall_tau(q.scores, grades);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

namespace {

void summarize(const std::string& method, const std::string& partition,
               const std::vector<const RankedQuery*>& qs, const std::vector<int>& cutoffs,
               std::vector<MetricRow>& out) {
  if (qs.empty()) return;
  struct Metric {
    const char* name;
    double (*fn)(const std::vector<int>&, int);
  };
  const Metric metrics[] = {{"dcg", dcg_at_k}, {"err", err_at_k}, {"ndcg", ndcg_at_k}};
  for (const auto& m : metrics) {
    for (int k : cutoffs) {
      std::vector<double> v;
      v.reserve(qs.size());
      for (const auto* q : qs) v.push_back(m.fn(q->grades, k));
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      out.push_back({method, m.name, k, partition, mean, sd, v.size()});
    }
  }
}

}  // namespace

std::vector<MetricRow> metric_report(const std::string& method,
                                     const std::vector<RankedQuery>& queries,
                                     const std::vector<int>& cutoffs) {
  std::vector<const RankedQuery*> all;
  for (const auto& q : queries) all.push_back(&q);
  std::vector<MetricRow> out;
  summarize(method, "all", all, cutoffs, out);
  return out;
}

std::vector<MetricRow> bucket_report(const std::string& method,
                                     const std::vector<RankedQuery>& queries,
                                     const std::vector<int>& cutoffs) {
  std::vector<const RankedQuery*> high, tail;
  for (const auto& q : queries) {
    if (q.bucket < 0) throw SchemaError("query " + q.query_id + " has no freq_bucket");
    (q.bucket <= 4 ? high : tail).push_back(&q);
  }
  std::vector<MetricRow> out;
  summarize(method, "high", high, cutoffs, out);
  summarize(method, "tail", tail, cutoffs, out);
  return out;
}

std::string metric_csv(const std::vector<MetricRow>& rows) {
  std::string s = "method,metric,cutoff,partition,mean,sd,n_queries\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%s,%.9g,%.9g,%zu\n", r.method.c_str(),
                  r.metric.c_str(), r.cutoff, r.partition.c_str(), r.mean, r.sd, r.n_queries);
    s += buf;
  }
  return s;
}

std::vector<PositionShift> rerank_position_analysis(
    const std::vector<std::vector<std::string>>& original,
    const std::vector<std::vector<std::string>>& reranked, int max_pos) {
  if (original.size() != reranked.size()) {
    throw std::invalid_argument("rerank_position_analysis: query count mismatch");
  }
  std::vector<double> sum(static_cast<std::size_t>(max_pos), 0.0);
  std::vector<double> sq(static_cast<std::size_t>(max_pos), 0.0);
  std::vector<std::size_t> cnt(static_cast<std::size_t>(max_pos), 0);
  for (std::size_t q = 0; q < original.size(); ++q) {
    std::map<std::string, int> new_pos;
    for (std::size_t i = 0; i < reranked[q].size(); ++i) {
      new_pos[reranked[q][i]] = static_cast<int>(i) + 1;
    }
    if (new_pos.size() != original[q].size() || reranked[q].size() != original[q].size()) {
      throw std::invalid_argument("rerank_position_analysis: doc sets differ in query " +
                                  std::to_string(q));
    }
    for (std::size_t i = 0; i < original[q].size() && i < static_cast<std::size_t>(max_pos); ++i) {
      const auto it = new_pos.find(original[q][i]);
      if (it == new_pos.end()) {
        throw std::invalid_argument("rerank_position_analysis: doc " + original[q][i] +
                                    " missing from the new ranking");
      }
      sum[i] += it->second;
      sq[i] += static_cast<double>(it->second) * it->second;
      ++cnt[i];
    }
  }
  std::vector<PositionShift> out;
  for (int k = 0; k < max_pos; ++k) {
    const auto c = cnt[static_cast<std::size_t>(k)];
    if (c == 0) continue;
    const double mean = sum[static_cast<std::size_t>(k)] / static_cast<double>(c);
    const double var = std::max(0.0, sq[static_cast<std::size_t>(k)] / static_cast<double>(c) - mean * mean);
    out.push_back({k + 1, mean, std::sqrt(var), c});
  }
  return out;
}

std::vector<PositionShift> rerank_position_analysis(const ClickLog& log,
                                                    const Eigen::VectorXd& scores, int max_pos) {
  if (scores.size() != static_cast<Eigen::Index>(log.size())) {
    throw std::invalid_argument("rerank_position_analysis: score vector length mismatch");
  }
  std::vector<std::vector<std::string>> original, reranked;
  for (const auto& g : log.groups()) {
    std::vector<std::size_t> idx(g.size());
    std::iota(idx.begin(), idx.end(), g.begin);
    std::vector<std::string> orig;
    for (auto i : idx) orig.push_back(log[i].doc_id);  // already in rank_position order
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const double sa = scores(static_cast<Eigen::Index>(a));
      const double sb = scores(static_cast<Eigen::Index>(b));
      if (sa != sb) return sa > sb;
      return log[a].doc_id < log[b].doc_id;
    });
    std::vector<std::string> now;
    for (auto i : idx) now.push_back(log[i].doc_id);
    original.push_back(std::move(orig));
    reranked.push_back(std::move(now));
  }
  return rerank_position_analysis(original, reranked, max_pos);
}

std::string position_csv(const std::vector<PositionShift>& rows) {
  std::string s = "orig_pos,mean_new_pos,sd\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", r.orig_pos, r.mean_new_pos, r.sd);
    s += buf;
  }
  return s;
}

}  // namespace wpultr
