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


// Small builders shared by the unit tests.

#ifndef WPULTR_TESTS_HELPERS_HPP_
#define WPULTR_TESTS_HELPERS_HPP_

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wpultr/core.hpp"

namespace wpultr::testing {

inline FeatureSchema tiny_schema() {
  return FeatureSchema({{"position", FeatureKind::kOrdinal, 3},
                        {"media", FeatureKind::kCategorical, 2},
                        {"height", FeatureKind::kContinuous, 0}});
}

inline ImpressionRecord record(const std::string& q, const std::string& d, int pos, int click,
                               int grade = kUnlabeled, int media = 0, double height = 100.0) {
  ImpressionRecord r;
  r.query_id = q;
  r.doc_id = d;
  r.rank_position = pos;
  r.click = click;
  r.true_relevance = grade;
  r.sepp = {static_cast<double>(pos), static_cast<double>(media), height};
  r.doc_features = Eigen::VectorXd::Constant(2, static_cast<double>(pos));
  return r;
}

// A fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wpultr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace wpultr::testing

#endif  // WPULTR_TESTS_HELPERS_HPP_
