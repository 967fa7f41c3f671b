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


#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "wpultr/baselines.hpp"
#include "wpultr/causal.hpp"
#include "wpultr/eval.hpp"
#include "wpultr/ingest.hpp"
#include "wpultr/json_io.hpp"
#include "wpultr/preprocess.hpp"
#include "wpultr/random.hpp"
#include "wpultr/simulate.hpp"
#include "wpultr/unbias.hpp"

namespace wpultr::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kEvalStream = 0xe7a1;
constexpr std::uint64_t kDiscoverStream = 0xd15c;

const std::vector<std::string> kMethods{"bal",    "naive",   "ipw",   "pb-bal",
                                        "fb-bal", "bal-pos", "bal-mm"};

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

// Resolved top-level settings shared by every subcommand.
struct Run {
  Json config;
  fs::path out;
  std::uint64_t seed = 0;
  int jobs = 1;

  const Json& section(const std::string& name) const {
    static const Json empty = Json::object();
    if (!config.contains(name)) return empty;
    const Json& s = config.at(name);
    if (!s.is_object()) throw ConfigError(name + ": expected an object");
    return s;
  }
};

// Typos in config keys should fail loudly rather than fall back to defaults.
void check_keys(const Json& obj, const std::string& ctx, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(ctx + "." + key + ": unknown key");
  }
}

Run resolve(const Flags& flags) {
  Run r;
  r.config = read_json_file(flags.config);
  if (!r.config.is_object()) throw ConfigError(flags.config + ": expected a JSON object");
  check_keys(r.config, "config",
             {"seed", "out", "scm", "simulate", "log", "eval_log", "preprocess", "causal",
              "density", "unbias", "baselines", "train", "evaluate", "report", "convert"});
  if (flags.seed) {
    r.seed = *flags.seed;
  } else if (r.config.contains("seed")) {
    r.seed = json_require<std::uint64_t>(r.config, "seed", "config");
  } else {
    throw ConfigError("config.seed: missing (set \"seed\" or pass --seed)");
  }
  if (!flags.out.empty()) {
    r.out = flags.out;
  } else if (r.config.contains("out")) {
    r.out = json_require<std::string>(r.config, "out", "config");
  } else {
    throw ConfigError("config.out: missing (set \"out\" or pass --out)");
  }
  if (flags.jobs < 1) throw ConfigError("--jobs: must be >= 1");
  r.jobs = flags.jobs;
  std::error_code ec;
  fs::create_directories(r.out, ec);
  if (ec || !fs::is_directory(r.out)) {
    throw IoError("cannot create output directory '" + r.out.string() + "'");
  }
  return r;
}

fs::path require_path(const Json& obj, const std::string& key, const std::string& ctx) {
  const fs::path p = json_require<std::string>(obj, key, ctx);
  if (!fs::exists(p)) throw IoError(ctx + "." + key + ": '" + p.string() + "' does not exist");
  return p;
}

TransformOptions transform_options(const Run& r) {
  const Json& s = r.section("preprocess");
  check_keys(s, "preprocess", {"bt_lambda", "embedding_dim"});
  TransformOptions t;
  t.bt_lambda = json_get<double>(s, "bt_lambda", "preprocess", t.bt_lambda);
  t.embedding_dim = json_get<int>(s, "embedding_dim", "preprocess", t.embedding_dim);
  if (!(t.bt_lambda > 0)) throw ConfigError("preprocess.bt_lambda: must be > 0");
  if (t.embedding_dim < 1) throw ConfigError("preprocess.embedding_dim: must be >= 1");
  t.seed = mix_seed(r.seed, 10);
  return t;
}

PcOptions pc_options(const Run& r) {
  const Json& s = r.section("causal");
  check_keys(s, "causal",
             {"alpha", "max_depth", "cap", "ridge_scale", "factor_tolerance", "max_rank", "sample"});
  PcOptions pc;
  pc.alpha = json_get<double>(s, "alpha", "causal", pc.alpha);
  pc.max_depth = json_get<int>(s, "max_depth", "causal", pc.max_depth);
  pc.kci.cap = json_get<std::size_t>(s, "cap", "causal", pc.kci.cap);
  pc.kci.ridge_scale = json_get<double>(s, "ridge_scale", "causal", pc.kci.ridge_scale);
  pc.kci.factor_tolerance =
      json_get<double>(s, "factor_tolerance", "causal", pc.kci.factor_tolerance);
  pc.kci.max_rank = json_get<int>(s, "max_rank", "causal", pc.kci.max_rank);
  if (!(pc.alpha > 0 && pc.alpha < 1)) throw ConfigError("causal.alpha: must lie in (0, 1)");
  if (pc.kci.cap < 20) throw ConfigError("causal.cap: must be >= 20");
  if (pc.kci.max_rank < 1) throw ConfigError("causal.max_rank: must be >= 1");
  pc.jobs = r.jobs;
  pc.kci.seed = mix_seed(r.seed, 11);
  return pc;
}

std::vector<int> int_list(const Json& s, const std::string& key, const std::string& ctx,
                          std::vector<int> fallback) {
  auto v = json_get<std::vector<int>>(s, key, ctx, std::move(fallback));
  for (int x : v) {
    if (x < 1) throw ConfigError(ctx + "." + key + ": entries must be >= 1");
  }
  return v;
}

DensityHyper density_hyper(const Run& r) {
  const Json& s = r.section("density");
  check_keys(s, "density",
             {"hidden", "learning_rate", "batch_size", "max_epochs", "grad_tolerance",
              "full_batch"});
  DensityHyper h;
  h.hidden = int_list(s, "hidden", "density", h.hidden);
  h.learning_rate = json_get<double>(s, "learning_rate", "density", h.learning_rate);
  h.batch_size = json_get<int>(s, "batch_size", "density", h.batch_size);
  h.max_epochs = json_get<int>(s, "max_epochs", "density", h.max_epochs);
  h.grad_tolerance = json_get<double>(s, "grad_tolerance", "density", h.grad_tolerance);
  h.full_batch = json_get<bool>(s, "full_batch", "density", h.full_batch);
  if (!(h.learning_rate > 0)) throw ConfigError("density.learning_rate: must be > 0");
  if (h.batch_size < 1) throw ConfigError("density.batch_size: must be >= 1");
  if (h.max_epochs < 0) throw ConfigError("density.max_epochs: must be >= 0");
  h.seed = mix_seed(r.seed, 12);
  return h;
}

RankerHyper ranker_hyper(const Run& r) {
  const Json& s = r.section("baselines");
  check_keys(s, "baselines", {"hidden", "learning_rate", "batch_size", "steps"});
  RankerHyper h;
  h.hidden = int_list(s, "hidden", "baselines", h.hidden);
  h.learning_rate = json_get<double>(s, "learning_rate", "baselines", h.learning_rate);
  h.batch_size = json_get<int>(s, "batch_size", "baselines", h.batch_size);
  h.steps = json_get<int>(s, "steps", "baselines", h.steps);
  if (!(h.learning_rate > 0)) throw ConfigError("baselines.learning_rate: must be > 0");
  if (h.batch_size < 1) throw ConfigError("baselines.batch_size: must be >= 1");
  if (h.steps < 0) throw ConfigError("baselines.steps: must be >= 0");
  h.seed = mix_seed(r.seed, 13);
  return h;
}

BalConfig bal_config(const Run& r) {
  const Json& s = r.section("unbias");
  check_keys(s, "unbias",
             {"steps", "batch_size", "warm_fraction", "discovery_period", "discovery_sample",
              "clip_low", "clip_high", "lr_click", "lr_rank", "refit_epochs"});
  BalConfig c;
  c.steps = json_get<int>(s, "steps", "unbias", c.steps);
  c.batch_size = json_get<int>(s, "batch_size", "unbias", c.batch_size);
  c.warm_fraction = json_get<double>(s, "warm_fraction", "unbias", c.warm_fraction);
  c.discovery_period = json_get<int>(s, "discovery_period", "unbias", c.discovery_period);
  c.discovery_sample = json_get<int>(s, "discovery_sample", "unbias", c.discovery_sample);
  c.clip_low = json_get<double>(s, "clip_low", "unbias", c.clip_low);
  c.clip_high = json_get<double>(s, "clip_high", "unbias", c.clip_high);
  c.lr_click = json_get<double>(s, "lr_click", "unbias", c.lr_click);
  c.lr_rank = json_get<double>(s, "lr_rank", "unbias", c.lr_rank);
  c.refit_epochs = json_get<int>(s, "refit_epochs", "unbias", c.refit_epochs);
  c.seed = r.seed;
  c.ranker = ranker_hyper(r);
  c.density = density_hyper(r);
  c.discovery = pc_options(r);
  c.transform = transform_options(r);
  c.validate();
  return c;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Wall-clock provenance lives here and nowhere else, so every other artifact
// stays byte-reproducible.
void write_meta(const Run& r, const std::string& command, const std::string& started,
                std::chrono::steady_clock::time_point t0) {
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json_file(r.out / "meta.json", Json{{"command", command},
                                            {"started_at", started},
                                            {"elapsed_seconds", elapsed},
                                            {"seed", r.seed},
                                            {"jobs", r.jobs}});
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Run& r, std::ostream& out) {
  Json scm = r.config.contains("scm") ? r.config.at("scm") : Json::object();
  if (!scm.is_object()) throw ConfigError("scm: expected an object");
  if (!scm.contains("seed")) scm["seed"] = r.seed;
  const ScmConfig config = scm_config_from_json(scm);

  const Json& s = r.section("simulate");
  check_keys(s, "simulate", {"eval_queries", "buckets"});
  const int eval_queries = json_get<int>(s, "eval_queries", "simulate", 0);
  const int buckets = json_get<int>(s, "buckets", "simulate", kNumFrequencyBuckets);
  if (eval_queries < 0) throw ConfigError("simulate.eval_queries: must be >= 0");
  if (buckets < 1 || buckets > kNumFrequencyBuckets) {
    throw ConfigError("simulate.buckets: must lie in [1, 10]");
  }

  auto [log, truth] = generate(config, r.jobs);
  log = assign_frequency_buckets(log, buckets);
  write_log(log, r.out / "log.tsv");
  write_json_file(r.out / "ground_truth.json",
                  Json{{"graph", graph_to_json(truth.graph)},
                       {"click_model", truth.click_model},
                       {"config", scm_config_to_json(config)}});
  out << "simulate: " << log.size() << " records, " << log.groups().size() << " queries -> "
      << (r.out / "log.tsv").string() << "\n";

  if (eval_queries > 0) {
    ScmConfig ec = config;
    ec.n_queries = eval_queries;
    ec.seed = mix_seed(config.seed, kEvalStream);
    auto held = generate(ec, r.jobs).first;
    held = assign_frequency_buckets(held, buckets);
    write_log(held, r.out / "eval_log.tsv");
    out << "simulate: " << held.size() << " held-out records -> "
        << (r.out / "eval_log.tsv").string() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- discover

ClickLog load_log(const Run& r, const std::string& key) {
  return read_log(require_path(r.config, key, "config"));
}

Json bias_report_json(const DiscoveryResult& d, std::size_t rows, const PcOptions& pc) {
  return Json{{"confounding", d.biases.confounding},
              {"sepp_bias", d.biases.sepp_bias},
              {"undirected", d.biases.undirected},
              {"conflicts", d.conflicts},
              {"rows", rows},
              {"alpha", pc.alpha},
              {"ci_tests", d.skeleton.tests.size()}};
}

std::string ci_csv(const std::vector<CiRecord>& tests) {
  std::string s = "x,y,given,statistic,p_value,degenerate\n";
  char buf[128];
  for (const auto& t : tests) {
    std::string given;
    for (std::size_t i = 0; i < t.given.size(); ++i) given += (i ? "|" : "") + t.given[i];
    std::snprintf(buf, sizeof(buf), ",%.9g,%.9g,%d\n", t.statistic, t.p_value,
                  t.degenerate ? 1 : 0);
    s += t.x + "," + t.y + "," + given + buf;
  }
  return s;
}

int cmd_discover(const Run& r, std::ostream& out) {
  const ClickLog log = load_log(r, "log");
  if (log.empty()) throw ConfigError("log: no records");
  const PcOptions pc = pc_options(r);
  const int sample = json_get<int>(r.section("causal"), "sample", "causal", 2000);
  if (sample < 20) throw ConfigError("causal.sample: must be >= 20");

  const FittedTransforms tr = fit_transforms(log, transform_options(r));
  // REL comes from the logged scores; logs without them get a naive click
  // model as a stand-in relevance estimate.
  const bool scored = std::all_of(log.records().begin(), log.records().end(),
                                  [](const ImpressionRecord& x) { return x.logged_score.has_value(); });
  DesignMatrix z;
  if (scored) {
    z = transform_log(log, tr);
  } else {
    const Eigen::VectorXd s = train_naive(log, ranker_hyper(r)).scores(log);
    z = transform_log(log, tr, &s);
  }
  Rng rng = make_rng(r.seed, kDiscoverStream);
  const auto rows = subsample_indices(log.size(), static_cast<std::size_t>(sample), rng);
  const DesignMatrix zs = z.select_rows(rows);
  const DiscoveryResult d = discover(zs, pc, false);

  write_json_file(r.out / "graph.json", graph_to_json(d.graph));
  write_json_file(r.out / "bias_report.json", bias_report_json(d, rows.size(), pc));
  write_text_file(r.out / "ci_tests.csv", ci_csv(d.skeleton.tests));
  out << "discover: " << d.graph.num_edges() << " edges from " << rows.size() << " rows, "
      << d.skeleton.tests.size() << " CI tests\n";
  for (const auto& e : d.graph.edges()) {
    out << "  " << e.from << (e.mark == CausalGraph::Mark::kDirected ? " -> " : " -- ") << e.to
        << "\n";
  }
  for (const auto& c : d.conflicts) out << "  conflict: " << c << "\n";
  return kOk;
}

// ---------------------------------------------------------------- train

std::string loss_csv(const std::vector<double>& trace, const std::string& phase) {
  std::string s = "step,phase,loss\n";
  char buf[96];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.9g\n", i, phase.c_str(), trace[i]);
    s += buf;
  }
  return s;
}

int cmd_train(const Run& r, std::ostream& out) {
  const Json& s = r.section("train");
  check_keys(s, "train", {"method", "position_feature", "media_feature"});
  const std::string method = json_require<std::string>(s, "method", "train");
  if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end()) {
    throw ConfigError("train.method: unknown method '" + method + "'");
  }
  const ClickLog log = load_log(r, "log");
  if (log.empty()) throw ConfigError("log: no records");

  // Stale artifacts from an earlier method would confuse report.
  for (const char* f : {"graph_snapshots.ndjson", "weights_stats.csv", "click_head.json",
                        "transforms.json", "propensity.json", "conflicts.txt"}) {
    fs::remove(r.out / f);
  }

  if (method == "naive" || method == "ipw") {
    const RankerHyper h = ranker_hyper(r);
    std::vector<double> trace;
    RankingModel model;
    if (method == "naive") {
      model = train_naive(log, h, &trace);
    } else {
      const PropensityTable prop = estimate_propensity(log);
      model = train_ipw(log, prop, h, &trace);
      write_json_file(r.out / "propensity.json", Json{{"propensity", prop.propensity}});
    }
    write_json_file(r.out / "ranker.json", ranker_to_json(model));
    write_text_file(r.out / "loss.csv", loss_csv(trace, method));
  } else {
    const BalConfig cfg = bal_variant(
        method, log.schema(), bal_config(r),
        json_get<std::string>(s, "position_feature", "train", std::string(kPosition)),
        json_get<std::string>(s, "media_feature", "train", std::string(kMedia)));
    const BalRun run = train_bal(log, cfg);
    write_bal_artifacts(run, r.out.string());
    std::string conflicts;
    for (const auto& c : run.conflicts) conflicts += c + "\n";
    write_text_file(r.out / "conflicts.txt", conflicts);
    out << "train: " << run.snapshots.size() << " graph snapshots\n";
  }
  write_json_file(r.out / "run.json", Json{{"method", method}, {"seed", r.seed}});
  out << "train: method " << method << " -> " << (r.out / "ranker.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const Run& r, std::ostream& out) {
  const Json& s = r.section("evaluate");
  check_keys(s, "evaluate", {"model", "cutoffs", "method", "max_pos"});
  const fs::path model_dir = json_get<std::string>(s, "model", "evaluate", r.out.string());
  const fs::path ranker_path = model_dir / "ranker.json";
  if (!fs::exists(ranker_path)) throw IoError("evaluate: no model at '" + ranker_path.string() + "'");
  std::string method = json_get<std::string>(s, "method", "evaluate", "");
  if (method.empty()) {
    const fs::path run_path = model_dir / "run.json";
    method = fs::exists(run_path) ? json_get<std::string>(read_json_file(run_path), "method",
                                                          "run", "model")
                                  : "model";
  }
  const std::vector<int> cutoffs = int_list(s, "cutoffs", "evaluate", {1, 3, 5, 10});
  const int max_pos = json_get<int>(s, "max_pos", "evaluate", 10);
  if (max_pos < 1) throw ConfigError("evaluate.max_pos: must be >= 1");

  const RankingModel model = ranker_from_json(read_json_file(ranker_path));
  const ClickLog log = load_log(r, "eval_log");
  const Eigen::VectorXd scores = model.scores(log);
  const auto queries = rank_queries(log, scores);

  write_text_file(r.out / "metrics.csv", metric_csv(metric_report(method, queries, cutoffs)));
  const bool bucketed = std::all_of(queries.begin(), queries.end(),
                                    [](const RankedQuery& q) { return q.bucket != kNoBucket; });
  if (bucketed) {
    write_text_file(r.out / "metrics_buckets.csv",
                    metric_csv(bucket_report(method, queries, cutoffs)));
  } else {
    fs::remove(r.out / "metrics_buckets.csv");
  }
  write_text_file(r.out / "positions.csv",
                  position_csv(rerank_position_analysis(log, scores, max_pos)));
  const double tau = mean_kendall_tau(queries);
  write_json_file(r.out / "summary.json",
                  Json{{"method", method}, {"kendall_tau", tau}, {"queries", queries.size()}});
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", tau);
  out << "evaluate: " << method << " on " << queries.size() << " queries, kendall tau " << buf
      << (bucketed ? "" : " (no frequency buckets, high/tail skipped)") << "\n";
  return kOk;
}

// ---------------------------------------------------------------- report

struct CsvRow {
  std::string method, metric, partition;
  int cutoff = 0;
  double mean = 0.0;
};

std::vector<CsvRow> read_metric_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 5) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed metric row");
    }
    rows.push_back({cells[0], cells[1], cells[3], std::stoi(cells[2]), std::stod(cells[4])});
  }
  return rows;
}

std::string render_timeline(const std::vector<GraphSnapshot>& snaps) {
  std::string s;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const auto& g = snaps[i].graph;
    if (i == 0) {
      s += "step " + std::to_string(snaps[i].step) + ": start";
      for (const auto& e : g.edges()) {
        s += " " + e.from + (e.mark == CausalGraph::Mark::kDirected ? "→" : "—") + e.to;
      }
      s += "\n";
      continue;
    }
    for (const auto& d : graph_diff(snaps[i - 1].graph, g)) {
      s += "step " + std::to_string(snaps[i].step) + ": " + d + "\n";
    }
  }
  return s;
}

int cmd_report(const Run& r, std::ostream& out, std::ostream& err) {
  const Json& s = r.section("report");
  check_keys(s, "report", {"runs"});
  const auto runs = json_require<std::vector<std::string>>(s, "runs", "report");
  if (runs.empty()) throw ConfigError("report.runs: need at least one run directory");

  // method -> "metric@k/partition" -> per-run means
  std::map<std::string, std::map<std::string, std::vector<double>>> table;
  std::map<std::string, std::vector<double>> taus;
  std::map<std::string, int> run_count;
  std::vector<std::string> missing;
  std::string merged = "run,method,metric,cutoff,partition,mean\n";
  std::string timeline;
  for (const auto& dir : runs) {
    const fs::path d(dir);
    const fs::path metrics = d / "metrics.csv";
    if (!fs::exists(metrics)) {
      missing.push_back(dir + ": metrics.csv");
      continue;
    }
    std::set<std::string> methods;
    for (const auto& file : {metrics, d / "metrics_buckets.csv"}) {
      if (!fs::exists(file)) continue;
      for (const auto& row : read_metric_csv(file)) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9g", row.mean);
        merged += dir + "," + row.method + "," + row.metric + "," + std::to_string(row.cutoff) +
                  "," + row.partition + "," + buf + "\n";
        table[row.method][row.metric + "@" + std::to_string(row.cutoff) + "/" + row.partition]
            .push_back(row.mean);
        methods.insert(row.method);
      }
    }
    for (const auto& m : methods) {
      ++run_count[m];
      if (fs::exists(d / "summary.json")) {
        taus[m].push_back(
            json_require<double>(read_json_file(d / "summary.json"), "kendall_tau", "summary"));
      }
    }
    const fs::path snaps = d / "graph_snapshots.ndjson";
    if (fs::exists(snaps)) {
      timeline += "# " + dir + "\n" + render_timeline(read_snapshots(snaps.string()));
    }
  }

  std::set<std::string> columns;
  for (const auto& [m, cols] : table) {
    for (const auto& [c, v] : cols) columns.insert(c);
  }
  auto mean = [](const std::vector<double>& v) {
    double t = 0.0;
    for (double x : v) t += x;
    return v.empty() ? 0.0 : t / static_cast<double>(v.size());
  };
  std::string csv = "method,runs,kendall_tau";
  for (const auto& c : columns) csv += "," + c;
  csv += "\n";
  std::ostringstream text;
  text << "method          runs  tau      ";
  for (const auto& c : columns) {
    if (c.find("/all") != std::string::npos) text << c.substr(0, c.size() - 4) << "  ";
  }
  text << "\n";
  char buf[64];
  for (const auto& [m, cols] : table) {
    const bool has_tau = taus.count(m) > 0;
    csv += m + "," + std::to_string(run_count[m]) + ",";
    if (has_tau) {
      std::snprintf(buf, sizeof(buf), "%.9g", mean(taus[m]));
      csv += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-15s %4d  ", m.c_str(), run_count[m]);
    text << buf;
    if (has_tau) {
      std::snprintf(buf, sizeof(buf), "%-7.4f  ", mean(taus[m]));
    } else {
      std::snprintf(buf, sizeof(buf), "%-7s  ", "-");
    }
    text << buf;
    for (const auto& c : columns) {
      csv += ",";
      const auto it = cols.find(c);
      if (it != cols.end()) {
        std::snprintf(buf, sizeof(buf), "%.9g", mean(it->second));
        csv += buf;
      }
      if (c.find("/all") == std::string::npos) continue;
      if (it != cols.end()) {
        std::snprintf(buf, sizeof(buf), "%-*.4f  ", static_cast<int>(c.size() - 4), mean(it->second));
      } else {
        std::snprintf(buf, sizeof(buf), "%-*s  ", static_cast<int>(c.size() - 4), "-");
      }
      text << buf;
    }
    csv += "\n";
    text << "\n";
  }
  write_text_file(r.out / "metrics_merged.csv", merged);
  write_text_file(r.out / "comparison.csv", csv);
  write_text_file(r.out / "comparison.txt", text.str());
  write_text_file(r.out / "timeline.txt", timeline);
  out << text.str();
  if (!timeline.empty()) out << "\n" << timeline;
  if (!missing.empty()) {
    for (const auto& m : missing) err << "report: missing " << m << "\n";
    return kValidationError;
  }
  return kOk;
}

// ---------------------------------------------------------------- convert

int cmd_convert(const Run& r, std::ostream& out) {
  const Json& s = r.section("convert");
  check_keys(s, "convert", {"input", "output", "from"});
  const fs::path input = require_path(s, "input", "convert");
  const std::string from = json_get<std::string>(s, "from", "convert", "baidu");
  fs::path output = json_get<std::string>(s, "output", "convert", "");
  if (from == "baidu") {
    if (output.empty()) output = r.out / "log.tsv";
    const ClickLog log = read_baidu_table(input);
    write_log(log, output);
    out << "convert: " << log.size() << " records -> " << output.string() << "\n";
  } else if (from == "wpultr") {
    if (output.empty()) output = r.out / "table.tsv";
    const ClickLog log = read_log(input);
    write_baidu_table(log, output);
    out << "convert: " << log.size() << " records -> " << output.string() << "\n";
  } else {
    throw ConfigError("convert.from: expected \"baidu\" or \"wpultr\"");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"wpultr: whole-page unbiased learning to rank"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "generate a click log from the structural causal model"},
      {"discover", "learn the user-behavior causal graph from a log"},
      {"train", "train a ranker (bal, naive, ipw, pb-bal, fb-bal, bal-pos, bal-mm)"},
      {"evaluate", "score a trained ranker on an annotated log"},
      {"report", "merge run metrics and render the graph timeline"},
      {"convert", "convert between a Baidu-style table and the wpultr log"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON run configuration")->required();
    sub->add_option("--out", flags.out, "output directory (overrides \"out\")");
    sub->add_option("--seed", flags.seed, "global seed (overrides \"seed\")");
    sub->add_option("--jobs", flags.jobs, "worker cap; results do not depend on it");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = timestamp();
    const Run r = resolve(flags);
    int code = kOk;
    if (command == "simulate") code = cmd_simulate(r, out);
    if (command == "discover") code = cmd_discover(r, out);
    if (command == "train") code = cmd_train(r, out);
    if (command == "evaluate") code = cmd_evaluate(r, out);
    if (command == "report") code = cmd_report(r, out, err);
    if (command == "convert") code = cmd_convert(r, out);
    write_meta(r, command, started, t0);
    return code;
  } catch (const ConfigError& e) {
    err << "wpultr " << command << ": config error: " << e.what() << "\n";
    return kValidationError;
  } catch (const SchemaError& e) {
    err << "wpultr " << command << ": schema error: " << e.what() << "\n";
    return kValidationError;
  } catch (const IngestError& e) {
    err << "wpultr " << command << ": input error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "wpultr " << command << ": " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace wpultr::cli
