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

#ifndef WPULTR_RANDOM_HPP_
#define WPULTR_RANDOM_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <vector>

namespace wpultr {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// Index drawn from a probability vector; the last index absorbs rounding.
template <typename Probabilities>
int sample_categorical(const Probabilities& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const int k = static_cast<int>(probs.size());
  for (int i = 0; i < k - 1; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return k - 1;
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> normal_matrix(
    Eigen::Index rows, Eigen::Index cols, Scalar sd, Rng& rng) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = static_cast<Scalar>(sd * standard_normal(rng));
    }
  }
  return m;
}

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);
// k distinct indices from 0..n-1 in increasing order (k >= n returns all).
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, Rng& rng);

}  // namespace wpultr

#endif  // WPULTR_RANDOM_HPP_
