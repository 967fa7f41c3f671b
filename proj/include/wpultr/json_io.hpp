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

#ifndef WPULTR_JSON_IO_HPP_
#define WPULTR_JSON_IO_HPP_

#include <Eigen/Core>

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "wpultr/nn.hpp"

namespace wpultr {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

// {"layers":[{"weight":<matrix>,"bias":[...]},...],"input_mask":[...]}
Json mlp_to_json(const Mlp<double>& net);
Mlp<double> mlp_from_json(const Json& j);

// Parse errors carry the file name and the parser's byte position.
Json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; output is byte-stable.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Typed lookup with a key-path diagnostic ("unbias.clip_low: expected number").
template <typename T>
T json_get(const Json& obj, const std::string& key, const std::string& context,
           const T& fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(context + "." + key + ": " + e.what());
  }
}

template <typename T>
T json_require(const Json& obj, const std::string& key, const std::string& context) {
  if (!obj.contains(key)) throw ConfigError(context + "." + key + ": missing");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(context + "." + key + ": " + e.what());
  }
}

}  // namespace wpultr

#endif  // WPULTR_JSON_IO_HPP_
