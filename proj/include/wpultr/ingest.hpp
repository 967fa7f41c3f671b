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

#ifndef WPULTR_INGEST_HPP_
#define WPULTR_INGEST_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>

#include "wpultr/core.hpp"

namespace wpultr {

inline constexpr std::string_view kLogMagic = "#wpultr-log v1";

// Malformed input. `line` is 1-based, 0 when the error is not tied to a line.
class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& what, std::size_t line = 0, std::string column = {})
      : std::runtime_error(what), line_(line), column_(std::move(column)) {}
  std::size_t line() const { return line_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t line_;
  std::string column_;
};

// TSV log format:
//   line 1: "#wpultr-log v1"
//   line 2: typed declarations "name:kind[:n]" for the reserved columns
//           followed by one declaration per SEPP feature
//   rest:   one impression per line; '-' marks an absent value.
std::string format_log(const ClickLog& log);
ClickLog parse_log(const std::string& text, const std::string& source = "<memory>");

ClickLog read_log(const std::filesystem::path& path);
void write_log(const ClickLog& log, const std::filesystem::path& path);

// Best-effort Baidu-ULTR style table: a header row of column names followed by
// tab-separated rows. Columns are matched by name (see README for aliases);
// heights are taken as given, no unit conversion is attempted.
ClickLog read_baidu_table(const std::filesystem::path& path);
void write_baidu_table(const ClickLog& log, const std::filesystem::path& path);

std::string format_real(double v);

}  // namespace wpultr

#endif  // WPULTR_INGEST_HPP_
