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

#include <cmath>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "wpultr/ingest.hpp"
#include "wpultr/json_io.hpp"
#include "wpultr/simulate.hpp"

using namespace wpultr;

namespace {

// Random valid log. Values are multiples of 1/8 when `exact` so they survive
// nine significant digits untouched.
ClickLog random_log(std::mt19937_64& rng, bool exact) {
  std::uniform_int_distribution<int> nq(0, 6), nd(1, 5), grade(-1, 4), media(0, 1), coin(0, 1);
  std::uniform_real_distribution<double> u(-50.0, 250.0);
  auto real = [&] { return exact ? std::round(u(rng) * 8) / 8 : u(rng); };
  std::vector<ImpressionRecord> recs;
  const int queries = nq(rng);
  for (int q = 0; q < queries; ++q) {
    const int docs = nd(rng);
    for (int d = 0; d < docs; ++d) {
      ImpressionRecord r;
      r.query_id = "q" + std::to_string(q);
      r.doc_id = "doc" + std::to_string(d);
      r.rank_position = d + 1;
      r.click = coin(rng);
      r.true_relevance = grade(rng);
      r.freq_bucket = q % 3 == 0 ? kNoBucket : q % 10;
      if (coin(rng)) r.logged_score = real();
      r.sepp = {static_cast<double>(1 + d % 3), static_cast<double>(media(rng)), real()};
      r.doc_features = Eigen::Vector2d(real(), real());
      recs.push_back(r);
    }
  }
  return group_queries(testing::tiny_schema(), std::move(recs));
}

std::string header_of(const ClickLog& log) {
  const std::string text = format_log(log);
  const auto first = text.find('\n');
  return text.substr(0, text.find('\n', first + 1) + 1);
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("header-only file reads as an empty log") {
  const auto empty = group_queries(testing::tiny_schema(), {});
  const std::string text = format_log(empty);
  CHECK(count_lines(text) == 2);
  CHECK(text.rfind(std::string(kLogMagic), 0) == 0);
  const auto back = parse_log(text);
  CHECK(back.empty());
  CHECK(back.schema() == testing::tiny_schema());
}

TEST_CASE("click of 2 is a malformed row naming the click column") {
  ClickLog one = group_queries(testing::tiny_schema(), {testing::record("q", "d", 1, 1)});
  std::string text = format_log(one);
  // flip the click cell of the data row
  const auto decl = text.find('\n', text.find('\n') + 1) + 1;
  std::stringstream header(text.substr(text.find('\n') + 1));
  std::string line;
  std::getline(header, line);
  std::size_t col = 0, pos = 0;
  while (line.compare(pos, 6, "click:") != 0) {
    pos = line.find('\t', pos) + 1;
    ++col;
  }
  std::string row = text.substr(decl);
  std::size_t start = 0;
  for (std::size_t c = 0; c < col; ++c) start = row.find('\t', start) + 1;
  REQUIRE(row[start] == '1');
  row[start] = '2';
  try {
    parse_log(text.substr(0, decl) + row, "bad.tsv");
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(e.column() == "click");
    CHECK(e.line() == 3);
  }
}

TEST_CASE("missing file and bad magic are reported") {
  CHECK_THROWS_AS(read_log("/nonexistent/wpultr.tsv"), IngestError);
  CHECK_THROWS_AS(parse_log("hello\nworld\n"), IngestError);
}

TEST_CASE("logs that violate invariants are rejected on read") {
  const auto dup = group_queries(testing::tiny_schema(),
                                 {testing::record("q", "a", 1, 0), testing::record("q", "b", 1, 0)});
  CHECK_THROWS_AS(parse_log(format_log(dup)), IngestError);
}

TEST_CASE("write then read is the identity") {
  const auto dir = testing::scratch_dir("ingest_rt");
  auto c = ScmConfig::default_biased();
  c.n_queries = 30;
  const auto log = generate(c).first;
  write_log(log, dir / "a.tsv");
  const auto back = read_log(dir / "a.tsv");
  // simulator values carry full precision, so compare through the text form
  CHECK(format_log(back) == format_log(log));
  write_log(back, dir / "b.tsv");
  CHECK(read_text_file(dir / "a.tsv") == read_text_file(dir / "b.tsv"));
}

TEST_CASE("empty log writes exactly the header, three records write three lines") {
  const auto dir = testing::scratch_dir("ingest_lines");
  const auto empty = group_queries(testing::tiny_schema(), {});
  write_log(empty, dir / "e.tsv");
  CHECK(read_text_file(dir / "e.tsv") == header_of(empty));
  const auto three = group_queries(testing::tiny_schema(),
                                   {testing::record("q", "a", 1, 0), testing::record("q", "b", 2, 1),
                                    testing::record("r", "c", 1, 0, 3)});
  write_log(three, dir / "t.tsv");
  write_log(three, dir / "t2.tsv");
  const auto text = read_text_file(dir / "t.tsv");
  CHECK(count_lines(text) == 2 + 3);
  CHECK(text == read_text_file(dir / "t2.tsv"));
}

TEST_CASE("round trip over random logs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto exact = random_log(rng, true);
    CHECK(parse_log(format_log(exact)) == exact);

    const auto noisy = random_log(rng, false);
    const auto back = parse_log(format_log(noisy));
    REQUIRE(back.size() == noisy.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      const auto& a = noisy[i];
      const auto& b = back[i];
      CHECK(a.query_id == b.query_id);
      CHECK(a.click == b.click);
      CHECK(a.true_relevance == b.true_relevance);
      CHECK(a.freq_bucket == b.freq_bucket);
      CHECK(a.logged_score.has_value() == b.logged_score.has_value());
      if (a.logged_score) {
        CHECK(std::abs(*a.logged_score - *b.logged_score) <= 1e-8 * std::abs(*a.logged_score));
      }
      for (std::size_t f = 0; f < a.sepp.size(); ++f) {
        CHECK(std::abs(a.sepp[f] - b.sepp[f]) <= 1e-8 * std::abs(a.sepp[f]));
      }
      for (Eigen::Index f = 0; f < a.doc_features.size(); ++f) {
        CHECK(std::abs(a.doc_features(f) - b.doc_features(f)) <=
              1e-8 * std::abs(a.doc_features(f)));
      }
    }
  }
}

TEST_CASE("Baidu-style table round trip keeps clicks and features") {
  const auto dir = testing::scratch_dir("ingest_baidu");
  auto c = ScmConfig::default_biased();
  c.n_queries = 5;
  const auto log = generate(c).first;
  write_baidu_table(log, dir / "t.tsv");
  const auto back = read_baidu_table(dir / "t.tsv");
  REQUIRE(back.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(back[i].click == log[i].click);
    CHECK(back[i].rank_position == log[i].rank_position);
    CHECK(back.sepp_value(i, "media") == log.sepp_value(i, "media"));
  }
  CHECK_THROWS_AS(read_baidu_table(dir / "missing.tsv"), IngestError);
}

}  // TEST_SUITE
