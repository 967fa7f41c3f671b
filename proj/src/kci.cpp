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

#include "wpultr/kci.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "wpultr/random.hpp"
#include "wpultr/special_functions.hpp"

namespace wpultr {
namespace kci_detail {

double median_bandwidth(const Eigen::MatrixXd& block) {
  const Eigen::Index n = block.rows();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (block.row(i) - block.row(j)).norm();
      if (v > 0) d.push_back(v);
    }
  }
  if (d.empty()) return 0.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

Eigen::MatrixXd gaussian_factor(const std::vector<Eigen::MatrixXd>& blocks,
                                const std::vector<double>& bandwidths, double tolerance,
                                int max_rank) {
  if (blocks.empty()) throw std::invalid_argument("gaussian_factor: no blocks");
  const Eigen::Index n = blocks[0].rows();
  const Eigen::Index cap = std::min<Eigen::Index>(n, max_rank);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, cap);
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(n);
  std::vector<double> inv2s2(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    inv2s2[b] = 1.0 / (2.0 * bandwidths[b] * bandwidths[b]);
  }
  Eigen::VectorXd col(n);
  Eigen::Index rank = 0;
  for (; rank < cap; ++rank) {
    Eigen::Index p = 0;
    const double dmax = diag.maxCoeff(&p);
    if (dmax < tolerance) break;
    for (Eigen::Index i = 0; i < n; ++i) {
      double e = 0.0;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        e += (blocks[b].row(i) - blocks[b].row(p)).squaredNorm() * inv2s2[b];
      }
      col(i) = std::exp(-e);
    }
    const double pivot = std::sqrt(dmax);
    if (rank > 0) {
      col.noalias() -= g.leftCols(rank) * g.row(p).head(rank).transpose();
    }
    g.col(rank) = col / pivot;
    diag -= g.col(rank).cwiseAbs2();
    diag(p) = 0.0;
  }
  return g.leftCols(rank);
}

}  // namespace kci_detail

namespace {

using kci_detail::gaussian_factor;
using kci_detail::median_bandwidth;

// Standardizes columns in place; false when some column is constant.
bool standardize(Eigen::MatrixXd& m) {
  bool all_varying = true;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mean = m.col(j).mean();
    m.col(j).array() -= mean;
    const double sd = std::sqrt(m.col(j).squaredNorm() / static_cast<double>(m.rows()));
    if (sd < 1e-12) {
      all_varying = false;
      m.col(j).setZero();
    } else {
      m.col(j) /= sd;
    }
  }
  return all_varying;
}

Eigen::MatrixXd drop_constant_columns(const Eigen::MatrixXd& m) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (m.col(j).squaredNorm() > 0) keep.push_back(j);
  }
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(keep[k]);
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

// Total order on matrices used to make the test independent of argument
// order.
bool matrix_less(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) return a.cols() < b.cols();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
    }
  }
  return false;
}

void center_rows(Eigen::MatrixXd& g) {
  if (g.cols() == 0) return;
  const Eigen::RowVectorXd mean = g.colwise().mean();
  g.rowwise() -= mean;
}

KciResult finish(KciResult r, double mean, double var) {
  if (!(mean > 0) || !(var > 0) || !std::isfinite(r.statistic)) {
    r.degenerate = true;
    r.p_value = 1.0;
    return r;
  }
  r.shape = mean * mean / var;
  r.scale = var / mean;
  r.p_value = gamma_sf(r.statistic, r.shape, r.scale);
  return r;
}

}  // namespace

KciResult kci_test(const Eigen::MatrixXd& x_in, const Eigen::MatrixXd& y_in,
                   const Eigen::MatrixXd& z_in, const KciOptions& options) {
  const Eigen::Index n_in = x_in.rows();
  if (y_in.rows() != n_in || z_in.rows() != n_in) {
    throw std::invalid_argument("kci_test: row counts differ");
  }
  if (x_in.cols() == 0 || y_in.cols() == 0) {
    throw std::invalid_argument("kci_test: x and y need at least one column");
  }
  if (n_in < 4) throw std::invalid_argument("kci_test: need at least 4 rows");

  Eigen::MatrixXd x, y, z;
  if (static_cast<std::size_t>(n_in) > options.cap) {
    Rng rng = make_rng(options.seed, 0x6b6369);
    const auto rows = subsample_indices(static_cast<std::size_t>(n_in), options.cap, rng);
    x = take_rows(x_in, rows);
    y = take_rows(y_in, rows);
    z = take_rows(z_in, rows);
  } else {
    x = x_in;
    y = y_in;
    z = z_in;
  }
  if (matrix_less(y, x)) std::swap(x, y);

  const Eigen::Index n = x.rows();
  KciResult result;
  result.n_used = static_cast<std::size_t>(n);
  const bool x_ok = standardize(x);
  const bool y_ok = standardize(y);
  if (!x_ok || !y_ok) {
    result.degenerate = true;
    return result;
  }
  standardize(z);
  z = drop_constant_columns(z);

  const double bx = median_bandwidth(x);
  const double by = median_bandwidth(y);
  const double dn = static_cast<double>(n);

  if (z.cols() == 0) {
    Eigen::MatrixXd gx = gaussian_factor({x}, {bx}, options.factor_tolerance, options.max_rank);
    Eigen::MatrixXd gy = gaussian_factor({y}, {by}, options.factor_tolerance, options.max_rank);
    center_rows(gx);
    center_rows(gy);
    result.statistic = (gx.transpose() * gy).squaredNorm();
    const double tx = gx.squaredNorm();
    const double ty = gy.squaredNorm();
    const double fx = (gx.transpose() * gx).squaredNorm();
    const double fy = (gy.transpose() * gy).squaredNorm();
    return finish(result, tx * ty / dn, 2.0 * fx * fy / (dn * dn));
  }

  const double bz = median_bandwidth(z);
  Eigen::MatrixXd gz = gaussian_factor({z}, {bz}, options.factor_tolerance, options.max_rank);
  Eigen::MatrixXd gx =
      gaussian_factor({x, z}, {bx, bz}, options.factor_tolerance, options.max_rank);
  Eigen::MatrixXd gy =
      gaussian_factor({y, z}, {by, bz}, options.factor_tolerance, options.max_rank);
  center_rows(gz);
  center_rows(gx);
  center_rows(gy);

  // Rz = lambda (Kz + lambda I)^{-1} = I - Gz (Gz'Gz + lambda I)^{-1} Gz'.
  const double lambda = options.ridge_scale * dn;
  Eigen::MatrixXd m = gz.transpose() * gz;
  m.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  const Eigen::MatrixXd fx = gx - gz * llt.solve(gz.transpose() * gx);
  const Eigen::MatrixXd fy = gy - gz * llt.solve(gz.transpose() * gy);

  result.statistic = (fx.transpose() * fy).squaredNorm();
  const Eigen::VectorXd rx = fx.rowwise().squaredNorm();
  const Eigen::VectorXd ry = fy.rowwise().squaredNorm();
  const double mean = rx.dot(ry);
  const Eigen::MatrixXd kx = fx * fx.transpose();
  const Eigen::MatrixXd ky = fy * fy.transpose();
  const double var = 2.0 * (kx.array() * ky.array()).square().sum();
  return finish(result, mean, var);
}

}  // namespace wpultr
