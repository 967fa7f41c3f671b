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

#ifndef WPULTR_NN_HPP_
#define WPULTR_NN_HPP_

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wpultr/random.hpp"

namespace wpultr {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Fully connected network with tanh hidden layers and a linear output layer.
// Batches are stored column-wise: an input batch is (inputs x batch).
template <typename Scalar>
class Mlp {
 public:
  struct Layer {
    MatrixX<Scalar> weight;  // (out x in)
    VectorX<Scalar> bias;
  };

  // Activations of every layer from a forward pass; index 0 is the input.
  struct Cache {
    std::vector<MatrixX<Scalar>> activations;
  };

  Mlp() = default;

  // `input_mask`, when non-empty, marks input columns allowed to feed the
  // first layer; masked columns get structurally zero weights.
  Mlp(const std::vector<int>& sizes, Rng& rng, const VectorX<Scalar>& input_mask = {})
      : input_mask_(input_mask) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");
    if (input_mask_.size() != 0 && input_mask_.size() != sizes.front()) {
      throw std::invalid_argument("Mlp input mask width mismatch");
    }
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int fan_in = (l == 0 && input_mask_.size()) ? std::max(1, static_cast<int>(input_mask_.sum()))
                                                       : sizes[l];
      Layer layer;
      layer.weight = normal_matrix<Scalar>(sizes[l + 1], sizes[l],
                                           static_cast<Scalar>(1.0 / std::sqrt(fan_in)), rng);
      layer.bias = VectorX<Scalar>::Zero(sizes[l + 1]);
      layers_.push_back(std::move(layer));
    }
    apply_mask(layers_.front().weight);
  }

  Eigen::Index inputs() const { return layers_.empty() ? 0 : layers_.front().weight.cols(); }
  Eigen::Index outputs() const { return layers_.empty() ? 0 : layers_.back().weight.rows(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  const VectorX<Scalar>& input_mask() const { return input_mask_; }
  void set_input_mask(const VectorX<Scalar>& mask) {
    input_mask_ = mask;
    if (!layers_.empty()) apply_mask(layers_.front().weight);
  }

  MatrixX<Scalar> forward(const MatrixX<Scalar>& input, Cache* cache = nullptr) const {
    MatrixX<Scalar> a = input;
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(a);
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      MatrixX<Scalar> z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.array().tanh().matrix();
      a = std::move(z);
      if (cache) cache->activations.push_back(a);
    }
    return a;
  }

  // Back-propagates dLoss/dOutput. Returns dLoss/dInput; when `grad` is not
  // null, parameter gradients are written into it (same shape as layers()).
  MatrixX<Scalar> backward(const Cache& cache, const MatrixX<Scalar>& grad_output,
                           std::vector<Layer>* grad) const {
    if (grad) grad->resize(layers_.size());
    MatrixX<Scalar> delta = grad_output;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& a_in = cache.activations[l];
      if (grad) {
        (*grad)[l].weight = delta * a_in.transpose();
        (*grad)[l].bias = delta.rowwise().sum();
        if (l == 0) apply_mask((*grad)[l].weight);
      }
      MatrixX<Scalar> back = layers_[l].weight.transpose() * delta;
      if (l > 0) {
        back.array() *= (Scalar(1) - a_in.array().square());
      }
      delta = std::move(back);
    }
    return delta;
  }

  Eigen::Index num_parameters() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  VectorX<Scalar> flat() const { return pack(layers_); }
  void set_flat(const VectorX<Scalar>& theta) {
    unpack(theta, &layers_);
    apply_mask(layers_.front().weight);
  }

  static VectorX<Scalar> pack(const std::vector<Layer>& layers) {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    VectorX<Scalar> out(n);
    Eigen::Index k = 0;
    for (const auto& l : layers) {
      out.segment(k, l.weight.size()) =
          Eigen::Map<const VectorX<Scalar>>(l.weight.data(), l.weight.size());
      k += l.weight.size();
      out.segment(k, l.bias.size()) = l.bias;
      k += l.bias.size();
    }
    return out;
  }

  static void unpack(const VectorX<Scalar>& theta, std::vector<Layer>* layers) {
    Eigen::Index k = 0;
    for (auto& l : *layers) {
      Eigen::Map<VectorX<Scalar>>(l.weight.data(), l.weight.size()) =
          theta.segment(k, l.weight.size());
      k += l.weight.size();
      l.bias = theta.segment(k, l.bias.size());
      k += l.bias.size();
    }
    if (k != theta.size()) throw std::invalid_argument("Mlp parameter vector size mismatch");
  }

 private:
  void apply_mask(MatrixX<Scalar>& first) const {
    if (input_mask_.size() == 0) return;
    for (Eigen::Index c = 0; c < first.cols(); ++c) {
      if (input_mask_(c) == Scalar(0)) first.col(c).setZero();
    }
  }

  std::vector<Layer> layers_;
  VectorX<Scalar> input_mask_;
};

// Adam on a flat parameter vector, minimizing.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(Scalar lr = Scalar(1e-3), Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999),
                Scalar eps = Scalar(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_learning_rate(Scalar lr) { lr_ = lr; }
  Scalar learning_rate() const { return lr_; }

  void step(VectorX<Scalar>& theta, const VectorX<Scalar>& grad) {
    if (m_.size() != theta.size()) {
      m_ = VectorX<Scalar>::Zero(theta.size());
      v_ = VectorX<Scalar>::Zero(theta.size());
      t_ = 0;
    }
    ++t_;
    m_ = beta1_ * m_ + (Scalar(1) - beta1_) * grad;
    v_ = beta2_ * v_ + (Scalar(1) - beta2_) * grad.cwiseProduct(grad);
    const Scalar c1 = Scalar(1) - std::pow(beta1_, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(beta2_, static_cast<Scalar>(t_));
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  Scalar lr_, beta1_, beta2_, eps_;
  VectorX<Scalar> m_, v_;
  long t_ = 0;
};

}  // namespace wpultr

#endif  // WPULTR_NN_HPP_
