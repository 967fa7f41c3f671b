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


#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "../../tools/cli.hpp"
#include "helpers.hpp"
#include "wpultr/causal.hpp"
#include "wpultr/ingest.hpp"
#include "wpultr/json_io.hpp"
#include "wpultr/simulate.hpp"

using namespace wpultr;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(const std::string& command, const fs::path& config) {
  std::ostringstream out, err;
  const int code = cli::run({command, "--config", config.string()}, out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& name, const Json& j) {
  const fs::path p = dir / name;
  write_json_file(p, j);
  return p;
}

Json small_scm(int queries) {
  return Json{{"n_queries", queries}, {"seed", 4}};
}

Json quick_unbias() {
  return Json{{"steps", 40},          {"batch_size", 32},      {"discovery_period", 15},
              {"discovery_sample", 300}, {"refit_epochs", 2}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate: zero queries writes a header-only log") {
  const auto dir = testing::scratch_dir("cli_sim0");
  const auto cfg = write_config(dir, "c.json",
                                {{"seed", 1}, {"out", (dir / "o").string()}, {"scm", small_scm(0)}});
  const auto r = invoke("simulate", cfg);
  CHECK(r.code == cli::kOk);
  CHECK(read_log(dir / "o" / "log.tsv").empty());
  CHECK(fs::exists(dir / "o" / "ground_truth.json"));
}

TEST_CASE("simulate: identical bytes across runs") {
  const auto dir = testing::scratch_dir("cli_sim2");
  for (const char* o : {"a", "b"}) {
    const auto cfg = write_config(dir, std::string(o) + ".json",
                                  {{"seed", 9},
                                   {"out", (dir / o).string()},
                                   {"scm", small_scm(20)},
                                   {"simulate", {{"eval_queries", 5}}}});
    REQUIRE(invoke("simulate", cfg).code == cli::kOk);
  }
  for (const char* f : {"log.tsv", "eval_log.tsv", "ground_truth.json"}) {
    CHECK(read_text_file(dir / "a" / f) == read_text_file(dir / "b" / f));
  }
}

TEST_CASE("missing seed and unknown keys are validation errors") {
  const auto dir = testing::scratch_dir("cli_noseed");
  auto r = invoke("simulate", write_config(dir, "c.json", {{"out", (dir / "o").string()}}));
  CHECK(r.code == cli::kValidationError);
  CHECK(r.err.find("seed") != std::string::npos);
  r = invoke("simulate",
             write_config(dir, "d.json", {{"seed", 1}, {"out", (dir / "o").string()}, {"bogus", 1}}));
  CHECK(r.code == cli::kValidationError);
  std::ostringstream out, err;
  CHECK(cli::run({"frobnicate"}, out, err) != cli::kOk);
}

TEST_CASE("discover: unreadable log fails with a message") {
  const auto dir = testing::scratch_dir("cli_disc_missing");
  const auto r = invoke("discover", write_config(dir, "c.json",
                                                 {{"seed", 1},
                                                  {"out", (dir / "o").string()},
                                                  {"log", (dir / "nope.tsv").string()}}));
  CHECK(r.code != cli::kOk);
  CHECK(r.err.find("nope.tsv") != std::string::npos);
}

TEST_CASE("discover: constant presentation features end up isolated") {
  const auto dir = testing::scratch_dir("cli_disc_const");
  auto c = ScmConfig::default_biased();
  c.n_queries = 40;
  auto log = generate(c).first;
  auto recs = log.records();
  for (auto& rec : recs) {
    rec.sepp[2] = 120.0;
    rec.sepp[3] = 150.0;
  }
  write_log(group_queries(log.schema(), recs), dir / "log.tsv");
  const auto r = invoke("discover", write_config(dir, "c.json",
                                                 {{"seed", 1},
                                                  {"out", (dir / "o").string()},
                                                  {"log", (dir / "log.tsv").string()},
                                                  {"causal", {{"sample", 400}}}}));
  REQUIRE(r.code == cli::kOk);
  const auto g = graph_from_json(read_json_file(dir / "o" / "graph.json"));
  CHECK(g.adjacents("height").empty());
  CHECK(g.adjacents("max_height").empty());
  CHECK(fs::exists(dir / "o" / "bias_report.json"));
  CHECK(fs::exists(dir / "o" / "ci_tests.csv"));
}

TEST_CASE("train: naive, pb-bal and bal artifacts") {
  const auto dir = testing::scratch_dir("cli_train");
  auto c = ScmConfig::default_biased();
  c.n_queries = 40;
  write_log(generate(c).first, dir / "log.tsv");
  auto config = [&](const std::string& method) {
    return write_config(dir, method + ".json",
                        {{"seed", 3},
                         {"out", (dir / method).string()},
                         {"log", (dir / "log.tsv").string()},
                         {"train", {{"method", method}}},
                         {"baselines", {{"steps", 20}, {"hidden", {8}}}},
                         {"density", {{"hidden", {8}}}},
                         {"unbias", quick_unbias()}});
  };
  REQUIRE(invoke("train", config("naive")).code == cli::kOk);
  CHECK(fs::exists(dir / "naive" / "ranker.json"));
  CHECK_FALSE(fs::exists(dir / "naive" / "graph_snapshots.ndjson"));

  REQUIRE(invoke("train", config("pb-bal")).code == cli::kOk);
  const auto pb = read_snapshots((dir / "pb-bal" / "graph_snapshots.ndjson").string());
  REQUIRE(pb.size() >= 2);
  for (const auto& s : pb) {
    CHECK(s.graph.num_edges() == 3);
    CHECK(s.graph.directed("REL", "position"));
    CHECK(s.graph.directed("position", "CLICK"));
    CHECK(s.graph.directed("REL", "CLICK"));
  }

  REQUIRE(invoke("train", config("bal")).code == cli::kOk);
  CHECK(read_snapshots((dir / "bal" / "graph_snapshots.ndjson").string()).size() >= 2);
  for (const char* f : {"weights_stats.csv", "loss.csv", "ranker.json", "click_head.json",
                        "transforms.json", "run.json"}) {
    CHECK(fs::exists(dir / "bal" / f));
  }

  const auto bad = write_config(dir, "bad.json",
                                {{"seed", 3},
                                 {"out", (dir / "bad").string()},
                                 {"log", (dir / "log.tsv").string()},
                                 {"train", {{"method", "magic"}}}});
  CHECK(invoke("train", bad).code == cli::kValidationError);
}

TEST_CASE("evaluate: oracle scores, method column, missing grades") {
  const auto dir = testing::scratch_dir("cli_eval");
  std::vector<ImpressionRecord> recs;
  for (int q = 0; q < 6; ++q) {
    for (int k = 1; k <= 3; ++k) {
      const int grade = (q + 3 * k) % 5;
      auto rec = testing::record("q" + std::to_string(q), "d" + std::to_string(k), k, 0, grade);
      rec.doc_features = Eigen::Vector2d(grade, 0.0);
      recs.push_back(rec);
    }
  }
  write_log(group_queries(testing::tiny_schema(), recs), dir / "eval.tsv");
  for (auto& rec : recs) rec.true_relevance = kUnlabeled;
  write_log(group_queries(testing::tiny_schema(), recs), dir / "nolabel.tsv");

  // score = feature 0, i.e. the grade itself
  const Json oracle{{"input_mean", {0.0, 0.0}},
                    {"input_sd", {1.0, 1.0}},
                    {"net",
                     {{"layers",
                       {{{"weight", {{"rows", 1}, {"cols", 2}, {"data", {{1.0, 0.0}}}}},
                         {"bias", {0.0}}}}},
                      {"input_mask", Json::array()}}}};
  fs::create_directories(dir / "model");
  write_json_file(dir / "model" / "ranker.json", oracle);

  auto config = [&](const std::string& name, const std::string& method, const fs::path& log) {
    return write_config(dir, name + ".json",
                        {{"seed", 1},
                         {"out", (dir / name).string()},
                         {"eval_log", log.string()},
                         {"evaluate", {{"model", (dir / "model").string()}, {"method", method}}}});
  };
  const auto ra = invoke("evaluate", config("a", "one", dir / "eval.tsv"));
  INFO(ra.err);
  REQUIRE(ra.code == cli::kOk);
  REQUIRE(invoke("evaluate", config("b", "two", dir / "eval.tsv")).code == cli::kOk);
  const std::string a = read_text_file(dir / "a" / "metrics.csv");
  std::string b = read_text_file(dir / "b" / "metrics.csv");
  CHECK(a.find("one,ndcg,10,all,1,0,6\n") != std::string::npos);
  std::string::size_type at = 0;
  while ((at = b.find("\ntwo,", at)) != std::string::npos) b.replace(at, 5, "\none,");
  CHECK(a == b);
  CHECK(fs::exists(dir / "a" / "positions.csv"));

  const auto r = invoke("evaluate", config("c", "x", dir / "nolabel.tsv"));
  CHECK(r.code != cli::kOk);
  CHECK(r.err.find("true_relevance") != std::string::npos);
}

TEST_CASE("report: single run, flat timeline, one removal, missing runs") {
  const auto dir = testing::scratch_dir("cli_report");
  fs::create_directories(dir / "run");
  write_text_file(dir / "run" / "metrics.csv",
                  "method,metric,cutoff,partition,mean,sd,n_queries\nbal,dcg,1,all,2.5,0.1,10\n");
  CausalGraph g({"REL", "CLICK", "p"});
  g.add_directed("REL", "CLICK");
  g.add_directed("REL", "p");
  g.add_directed("p", "CLICK");
  const std::string snaps = (dir / "run" / "graph_snapshots.ndjson").string();
  append_snapshot(snaps, {0, g});
  append_snapshot(snaps, {10, g});
  auto cfg = write_config(dir, "c.json",
                          {{"seed", 1},
                           {"out", (dir / "rep").string()},
                           {"report", {{"runs", {(dir / "run").string()}}}}});
  auto r = invoke("report", cfg);
  REQUIRE(r.code == cli::kOk);
  const std::string table = read_text_file(dir / "rep" / "comparison.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 2);
  std::string timeline = read_text_file(dir / "rep" / "timeline.txt");
  CHECK(timeline.find("step 10") == std::string::npos);

  g.remove_edge("REL", "p");
  append_snapshot(snaps, {20, g});
  REQUIRE(invoke("report", cfg).code == cli::kOk);
  timeline = read_text_file(dir / "rep" / "timeline.txt");
  CHECK(timeline.find("step 20: − REL→p\n") != std::string::npos);

  cfg = write_config(dir, "m.json",
                     {{"seed", 1},
                      {"out", (dir / "rep2").string()},
                      {"report", {{"runs", {(dir / "run").string(), (dir / "gone").string()}}}}});
  r = invoke("report", cfg);
  CHECK(r.code == cli::kValidationError);
  CHECK(r.err.find("gone") != std::string::npos);
}

TEST_CASE("convert round trip through the Baidu-style table") {
  const auto dir = testing::scratch_dir("cli_convert");
  auto c = ScmConfig::default_biased();
  c.n_queries = 4;
  const auto log = generate(c).first;
  write_log(log, dir / "log.tsv");
  REQUIRE(invoke("convert", write_config(dir, "a.json",
                                         {{"seed", 1},
                                          {"out", dir.string()},
                                          {"convert",
                                           {{"input", (dir / "log.tsv").string()},
                                            {"from", "wpultr"},
                                            {"output", (dir / "t.tsv").string()}}}}))
              .code == cli::kOk);
  REQUIRE(invoke("convert", write_config(dir, "b.json",
                                         {{"seed", 1},
                                          {"out", dir.string()},
                                          {"convert",
                                           {{"input", (dir / "t.tsv").string()},
                                            {"output", (dir / "back.tsv").string()}}}}))
              .code == cli::kOk);
  CHECK(read_log(dir / "back.tsv").size() == log.size());
}

}  // TEST_SUITE
