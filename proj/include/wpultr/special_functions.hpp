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

#ifndef WPULTR_SPECIAL_FUNCTIONS_HPP_
#define WPULTR_SPECIAL_FUNCTIONS_HPP_

#include <cmath>

namespace wpultr {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

inline double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
// Upper tail Q(a, x) = 1 - P(a, x), accurate in the far tail.
double gamma_q(double a, double x);

// Survival function of Gamma(shape, scale) at x.
inline double gamma_sf(double x, double shape, double scale) {
  if (x <= 0) return 1.0;
  return gamma_q(shape, x / scale);
}

}  // namespace wpultr

#endif  // WPULTR_SPECIAL_FUNCTIONS_HPP_
