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

#ifndef WPULTR_KCI_HPP_
#define WPULTR_KCI_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wpultr {

struct KciOptions {
  std::size_t cap = 2000;        // rows kept per test; larger inputs are subsampled
  std::uint64_t seed = 0;        // drives the subsample
  double ridge_scale = 1e-3;     // kernel ridge regularizer is ridge_scale * n
  double factor_tolerance = 1e-6;  // incomplete Cholesky stopping residual
  int max_rank = 400;
};

struct KciResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double shape = 0.0;  // gamma null approximation
  double scale = 0.0;
  std::size_t n_used = 0;
  bool degenerate = false;  // a zero-variance input short-circuited the test
};

// Kernel (conditional) independence test of x and y given z. Each argument
// is (n x d); z may have zero columns. Gaussian kernels use a median-distance
// bandwidth per variable block. The conditional statistic residualizes the
// (x, z) and (y, z) kernels on z by kernel ridge regression. The result is
// exactly symmetric in (x, y).
KciResult kci_test(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                   const KciOptions& options = {});

inline KciResult kci_test(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          const KciOptions& options = {}) {
  return kci_test(x, y, Eigen::MatrixXd(x.rows(), 0), options);
}

namespace kci_detail {

// Pivoted incomplete Cholesky of the Gaussian product kernel over the given
// standardized blocks: K ~= G G^T with G (n x rank).
Eigen::MatrixXd gaussian_factor(const std::vector<Eigen::MatrixXd>& blocks,
                                const std::vector<double>& bandwidths, double tolerance,
                                int max_rank);

// Median pairwise Euclidean distance over nonzero distances; 0 for constant
// data.
double median_bandwidth(const Eigen::MatrixXd& block);

}  // namespace kci_detail

}  // namespace wpultr

#endif  // WPULTR_KCI_HPP_
