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

#include "wpultr/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>

#include "wpultr/json_io.hpp"

namespace wpultr {
namespace {

const std::vector<std::string> kReserved = {"query_id",     "doc_id",      "rank_position",
                                            "click",        "true_relevance", "freq_bucket",
                                            "logged_score", "doc_features"};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  return lines;
}

std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Cursor {
  const std::string& source;
  std::size_t line;

  [[noreturn]] void fail(const std::string& column, const std::string& what) const {
    throw IngestError(source + ":" + std::to_string(line) + ": column '" + column + "': " + what,
                      line, column);
  }

  long long integer(const std::string& column, const std::string& cell) const {
    const auto v = parse_int(cell);
    if (!v) fail(column, "expected an integer, got '" + cell + "'");
    return *v;
  }

  double real(const std::string& column, const std::string& cell) const {
    const auto v = parse_double(cell);
    if (!v) fail(column, "expected a finite number, got '" + cell + "'");
    return *v;
  }
};

std::string features_cell(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real(v(i));
  }
  return out;
}

Eigen::VectorXd parse_features(const Cursor& cur, const std::string& column,
                               const std::string& cell, Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  if (dim == 0) {
    if (!cell.empty() && cell != "-") cur.fail(column, "expected no features");
    return v;
  }
  const auto parts = split(cell, ',');
  if (static_cast<Eigen::Index>(parts.size()) != dim) {
    cur.fail(column, "expected " + std::to_string(dim) + " comma-separated values, got " +
                         std::to_string(parts.size()));
  }
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = cur.real(column, parts[static_cast<std::size_t>(i)]);
  return v;
}

ClickLog checked(FeatureSchema schema, std::vector<ImpressionRecord> records,
                 const std::string& source) {
  ClickLog log = group_queries(std::move(schema), std::move(records));
  const auto violations = validate_log(log);
  if (!violations.empty()) {
    std::string msg = source + ": " + std::to_string(violations.size()) +
                      " invariant violation(s); first: record " +
                      std::to_string(violations.front().record) + " violates '" +
                      violations.front().rule + "'";
    throw IngestError(msg);
  }
  return log;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_log(const ClickLog& log) {
  std::string out(kLogMagic);
  out += '\n';
  const auto& schema = log.schema();
  out += "query_id:id\tdoc_id:id\trank_position:int\tclick:binary\ttrue_relevance:grade\t"
         "freq_bucket:bucket\tlogged_score:real\tdoc_features:vector:" +
         std::to_string(log.doc_feature_dim());
  for (const auto& f : schema.entries()) {
    out += '\t' + f.name + ':' + std::string(to_string(f.kind));
    if (f.discrete()) out += ':' + std::to_string(f.cardinality);
  }
  out += '\n';
  for (const auto& r : log.records()) {
    out += r.query_id + '\t' + r.doc_id + '\t' + std::to_string(r.rank_position) + '\t' +
           std::to_string(r.click) + '\t' +
           (r.labeled() ? std::to_string(r.true_relevance) : std::string("-")) + '\t' +
           (r.freq_bucket == kNoBucket ? std::string("-") : std::to_string(r.freq_bucket)) +
           '\t' + (r.logged_score ? format_real(*r.logged_score) : std::string("-")) + '\t' +
           features_cell(r.doc_features);
    for (std::size_t f = 0; f < schema.size(); ++f) {
      out += '\t';
      if (schema[f].discrete()) {
        out += std::to_string(static_cast<long long>(r.sepp[f]));
      } else {
        out += format_real(r.sepp[f]);
      }
    }
    out += '\n';
  }
  return out;
}

ClickLog parse_log(const std::string& text, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kLogMagic) {
    throw IngestError(source + ":1: missing '" + std::string(kLogMagic) + "' header", 1);
  }
  if (lines.size() < 2) throw IngestError(source + ":2: missing column declarations", 2);

  const auto decls = split(lines[1], '\t');
  std::map<std::string, std::size_t> column_of;
  std::vector<FeatureSpec> features;
  std::vector<std::size_t> feature_columns;
  Eigen::Index dim = 0;
  for (std::size_t c = 0; c < decls.size(); ++c) {
    const auto parts = split(decls[c], ':');
    if (parts.size() < 2 || parts[0].empty()) {
      throw IngestError(source + ":2: malformed declaration '" + decls[c] + "'", 2, decls[c]);
    }
    const std::string& name = parts[0];
    if (!column_of.emplace(name, c).second) {
      throw IngestError(source + ":2: duplicate column '" + name + "'", 2, name);
    }
    if (std::find(kReserved.begin(), kReserved.end(), name) != kReserved.end()) {
      if (name == "doc_features") {
        const auto d = parts.size() == 3 ? parse_int(parts[2]) : std::nullopt;
        if (!d || *d < 0) throw IngestError(source + ":2: doc_features needs a dimension", 2, name);
        dim = static_cast<Eigen::Index>(*d);
      }
      continue;
    }
    FeatureSpec spec;
    spec.name = name;
    try {
      spec.kind = feature_kind_from_string(parts[1]);
    } catch (const SchemaError& e) {
      throw IngestError(source + ":2: " + e.what(), 2, name);
    }
    if (spec.discrete()) {
      const auto card = parts.size() == 3 ? parse_int(parts[2]) : std::nullopt;
      if (!card) throw IngestError(source + ":2: '" + name + "' needs a cardinality", 2, name);
      spec.cardinality = static_cast<int>(*card);
    } else if (parts.size() != 2) {
      throw IngestError(source + ":2: malformed declaration '" + decls[c] + "'", 2, name);
    }
    features.push_back(spec);
    feature_columns.push_back(c);
  }
  for (const auto& r : kReserved) {
    if (!column_of.count(r)) {
      throw IngestError(source + ":2: reserved column '" + r + "' missing", 2, r);
    }
  }
  FeatureSchema schema;
  try {
    schema = FeatureSchema(features);
  } catch (const SchemaError& e) {
    throw IngestError(source + ":2: " + e.what(), 2);
  }

  std::vector<ImpressionRecord> records;
  records.reserve(lines.size() - 2);
  for (std::size_t li = 2; li < lines.size(); ++li) {
    const Cursor cur{source, li + 1};
    const auto cells = split(lines[li], '\t');
    if (cells.size() != decls.size()) {
      throw IngestError(source + ":" + std::to_string(li + 1) + ": expected " +
                            std::to_string(decls.size()) + " columns, got " +
                            std::to_string(cells.size()),
                        li + 1);
    }
    auto cell = [&](const std::string& name) -> const std::string& {
      return cells[column_of.at(name)];
    };
    ImpressionRecord r;
    r.query_id = cell("query_id");
    r.doc_id = cell("doc_id");
    if (r.query_id.empty()) cur.fail("query_id", "empty identifier");
    if (r.doc_id.empty()) cur.fail("doc_id", "empty identifier");
    r.rank_position = static_cast<int>(cur.integer("rank_position", cell("rank_position")));
    if (r.rank_position < 1) cur.fail("rank_position", "must be >= 1");
    const auto click = cur.integer("click", cell("click"));
    if (click != 0 && click != 1) cur.fail("click", "expected 0 or 1, got '" + cell("click") + "'");
    r.click = static_cast<int>(click);
    if (cell("true_relevance") != "-") {
      const auto g = cur.integer("true_relevance", cell("true_relevance"));
      if (g < 0 || g > kMaxGrade) cur.fail("true_relevance", "expected a grade in 0..4 or '-'");
      r.true_relevance = static_cast<int>(g);
    }
    if (cell("freq_bucket") != "-") {
      const auto b = cur.integer("freq_bucket", cell("freq_bucket"));
      if (b < 0 || b >= kNumFrequencyBuckets) cur.fail("freq_bucket", "expected 0..9 or '-'");
      r.freq_bucket = static_cast<int>(b);
    }
    if (cell("logged_score") != "-") r.logged_score = cur.real("logged_score", cell("logged_score"));
    r.doc_features = parse_features(cur, "doc_features", cell("doc_features"), dim);
    r.sepp.resize(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto& spec = schema[f];
      const std::string& text = cells[feature_columns[f]];
      if (spec.discrete()) {
        const auto v = cur.integer(spec.name, text);
        const long long lo = spec.kind == FeatureKind::kOrdinal ? 1 : 0;
        const long long hi = spec.kind == FeatureKind::kOrdinal ? spec.cardinality
                                                                : spec.cardinality - 1;
        if (v < lo || v > hi) {
          cur.fail(spec.name, "level " + text + " outside [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
        }
        r.sepp[f] = static_cast<double>(v);
      } else {
        r.sepp[f] = cur.real(spec.name, text);
      }
    }
    records.push_back(std::move(r));
  }
  return checked(std::move(schema), std::move(records), source);
}

ClickLog read_log(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IngestError("log file '" + path.string() + "' does not exist");
  }
  return parse_log(read_text_file(path), path.string());
}

void write_log(const ClickLog& log, const std::filesystem::path& path) {
  write_text_file(path, format_log(log));
}

// ---------------------------------------------------------------------------
// Baidu-style table

namespace {

const std::map<std::string, std::vector<std::string>> kBaiduAliases = {
    {"query_id", {"qid", "query_id", "query"}},
    {"doc_id", {"did", "doc_id", "url_md5"}},
    {"position", {"pos", "position", "rank"}},
    {"media", {"multimedia_type", "media_type", "media"}},
    {"height", {"serp_height", "height"}},
    {"max_height", {"max_serp_height", "max_height"}},
    {"click", {"click"}},
    {"label", {"label", "relevance", "true_relevance"}},
    {"freq", {"freq", "frequency_bucket", "freq_bucket"}},
    {"score", {"score", "logged_score"}},
    {"features", {"features", "doc_features"}},
};

std::optional<std::size_t> find_alias(const std::vector<std::string>& header,
                                      const std::string& canonical) {
  for (const auto& alias : kBaiduAliases.at(canonical)) {
    const auto it = std::find(header.begin(), header.end(), alias);
    if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  }
  return std::nullopt;
}

}  // namespace

ClickLog read_baidu_table(const std::filesystem::path& path) {
  const std::string source = path.string();
  if (!std::filesystem::exists(path)) throw IngestError("table '" + source + "' does not exist");
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty()) throw IngestError(source + ":1: missing header row", 1);
  const auto header = split(lines[0], '\t');
  std::map<std::string, std::size_t> col;
  for (const auto& [canonical, aliases] : kBaiduAliases) {
    if (const auto c = find_alias(header, canonical)) col[canonical] = *c;
  }
  for (const char* required : {"query_id", "doc_id", "position", "media", "height", "max_height",
                               "click"}) {
    if (!col.count(required)) {
      throw IngestError(source + ":1: no column for '" + std::string(required) + "'", 1, required);
    }
  }

  std::vector<ImpressionRecord> records;
  int max_position = 2;
  int max_media = 1;
  Eigen::Index dim = -1;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const Cursor cur{source, li + 1};
    const auto cells = split(lines[li], '\t');
    if (cells.size() != header.size()) {
      throw IngestError(source + ":" + std::to_string(li + 1) + ": expected " +
                            std::to_string(header.size()) + " columns",
                        li + 1);
    }
    auto cell = [&](const char* name) -> const std::string& { return cells[col.at(name)]; };
    ImpressionRecord r;
    r.query_id = cell("query_id");
    r.doc_id = cell("doc_id");
    r.rank_position = static_cast<int>(cur.integer(header[col.at("position")], cell("position")));
    const auto media = cur.integer(header[col.at("media")], cell("media"));
    if (media < 0) cur.fail(header[col.at("media")], "media type codes must be >= 0");
    const auto click = cur.integer("click", cell("click"));
    if (click != 0 && click != 1) cur.fail("click", "expected 0 or 1, got '" + cell("click") + "'");
    r.click = static_cast<int>(click);
    r.sepp = {static_cast<double>(r.rank_position), static_cast<double>(media),
              cur.real(header[col.at("height")], cell("height")),
              cur.real(header[col.at("max_height")], cell("max_height"))};
    max_position = std::max(max_position, r.rank_position);
    max_media = std::max(max_media, static_cast<int>(media));
    if (col.count("label") && cell("label") != "-" && !cell("label").empty()) {
      r.true_relevance = static_cast<int>(cur.integer(header[col.at("label")], cell("label")));
    }
    if (col.count("freq") && cell("freq") != "-" && !cell("freq").empty()) {
      r.freq_bucket = static_cast<int>(cur.integer(header[col.at("freq")], cell("freq")));
    }
    if (col.count("score") && cell("score") != "-" && !cell("score").empty()) {
      r.logged_score = cur.real(header[col.at("score")], cell("score"));
    }
    if (col.count("features") && !cell("features").empty() && cell("features") != "-") {
      const auto parts = split(cell("features"), ',');
      r.doc_features = parse_features(cur, header[col.at("features")], cell("features"),
                                      static_cast<Eigen::Index>(parts.size()));
    } else {
      r.doc_features = Eigen::VectorXd(0);
    }
    if (dim >= 0 && r.doc_features.size() != dim) {
      cur.fail("features", "inconsistent feature dimension");
    }
    dim = r.doc_features.size();
    records.push_back(std::move(r));
  }
  FeatureSchema schema({{"position", FeatureKind::kOrdinal, max_position},
                        {"media", FeatureKind::kCategorical, max_media + 1},
                        {"height", FeatureKind::kContinuous, 0},
                        {"max_height", FeatureKind::kContinuous, 0}});
  return checked(std::move(schema), std::move(records), source);
}

void write_baidu_table(const ClickLog& log, const std::filesystem::path& path) {
  const auto& schema = log.schema();
  const auto pos = schema.index_of("position");
  const auto media = schema.index_of("media");
  const auto height = schema.index_of("height");
  const auto max_height = schema.index_of("max_height");
  if (!media || !height || !max_height) {
    throw IngestError("Baidu-style export needs media, height and max_height features");
  }
  std::string out =
      "qid\tdid\tpos\tmultimedia_type\tserp_height\tmax_serp_height\tclick\tlabel\tfreq\tscore\t"
      "features\n";
  for (const auto& r : log.records()) {
    const int position = pos ? static_cast<int>(r.sepp[*pos]) : r.rank_position;
    out += r.query_id + '\t' + r.doc_id + '\t' + std::to_string(position) + '\t' +
           std::to_string(static_cast<long long>(r.sepp[*media])) + '\t' +
           format_real(r.sepp[*height]) + '\t' + format_real(r.sepp[*max_height]) + '\t' +
           std::to_string(r.click) + '\t' +
           (r.labeled() ? std::to_string(r.true_relevance) : std::string("-")) + '\t' +
           (r.freq_bucket == kNoBucket ? std::string("-") : std::to_string(r.freq_bucket)) +
           '\t' + (r.logged_score ? format_real(*r.logged_score) : std::string("-")) + '\t' +
           (r.doc_features.size() ? features_cell(r.doc_features) : std::string("-")) + '\n';
  }
  write_text_file(path, out);
}

}  // namespace wpultr
