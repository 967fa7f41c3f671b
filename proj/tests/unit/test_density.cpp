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

#include <array>
#include <cmath>

#include "wpultr/density.hpp"
#include "wpultr/random.hpp"

using namespace wpultr;

namespace {

// Design matrix [CLICK, REL, x (continuous), m (categorical, 3 levels, 1 col)].
DesignMatrix synthetic(const Eigen::VectorXd& click, const Eigen::VectorXd& rel,
                       const Eigen::VectorXd& x, const Eigen::VectorXi& m) {
  DesignMatrix z;
  z.layout.add("CLICK", NodeKind::kClick, 1, 2);
  z.layout.add("REL", NodeKind::kScore, 1);
  z.layout.add("x", NodeKind::kContinuous, 1);
  z.layout.add("m", NodeKind::kCategorical, 1, 3);
  const Eigen::Index n = rel.size();
  z.values.resize(n, 4);
  z.values.col(0) = click;
  z.values.col(1) = rel;
  z.values.col(2) = x;
  z.values.col(3) = m.cast<double>();
  z.codes["CLICK"] = click.cast<int>();
  z.codes["m"] = m;
  return z;
}

DesignMatrix random_design(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd c(n), r(n), x(n);
  Eigen::VectorXi m(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i) = standard_normal(rng);
    x(i) = standard_normal(rng);
    m(i) = static_cast<int>(uniform01(rng) * 3);
    c(i) = uniform01(rng) < 0.3 ? 1 : 0;
  }
  return synthetic(c, r, x, m);
}

DensityHyper quick(std::uint64_t seed = 1) {
  DensityHyper h;
  h.hidden = {16, 16};
  h.learning_rate = 1e-2;
  h.batch_size = 256;
  h.max_epochs = 60;
  h.seed = seed;
  return h;
}

}  // namespace

TEST_SUITE("density") {

TEST_CASE("mask_input keeps exactly the parent columns") {
  Rng rng(1);
  const auto z = random_design(5, rng);
  CHECK(mask_input(z.values, {}, z.layout).isZero());
  CHECK(mask_input(z.values, {"CLICK", "REL", "x", "m"}, z.layout) == z.values);
  const auto rel = mask_input(z.values, {"REL"}, z.layout);
  CHECK(rel.col(1) == z.values.col(1));
  CHECK(rel.col(0).isZero());
  CHECK(rel.col(2).isZero());
  CHECK(rel.col(3).isZero());
  CHECK_THROWS_AS(mask_input(z.values, {"nope"}, z.layout), SchemaError);
}

TEST_CASE("fit rejects bad requests") {
  Rng rng(2);
  const auto z = random_design(100, rng);
  CHECK_THROWS_AS(fit(z, "x", {"x"}, HeadKind::kGaussian, quick()), std::invalid_argument);
  CHECK_THROWS_AS(fit(z, "m", {"REL"}, HeadKind::kGaussian, quick()), std::invalid_argument);
  CHECK_THROWS_AS(fit(z, "CLICK", {"REL"}, HeadKind::kGaussian, quick()), std::invalid_argument);
  const auto small = random_design(30, rng);
  CHECK_THROWS_AS(fit(small, "x", {"REL"}, HeadKind::kGaussian, quick()), std::invalid_argument);
}

TEST_CASE("independent target recovers the marginal") {
  Rng rng(3);
  const Eigen::Index n = 3000;
  auto z = random_design(n, rng);
  for (Eigen::Index i = 0; i < n; ++i) z.values(i, 2) = 1.5 + 0.7 * standard_normal(rng);
  const auto [est, report] = fit(z, "x", {"REL"}, HeadKind::kGaussian, quick());
  const Eigen::MatrixXd out = est.outputs(z.values);
  const double mean = z.values.col(2).mean();
  const double sd = std::sqrt((z.values.col(2).array() - mean).square().mean());
  CHECK(std::abs(out.row(0).mean() - mean) < 0.05);
  CHECK(std::abs(out.row(1).array().exp().mean() - sd) < 0.1);
}

TEST_CASE("linear-Gaussian slope and noise") {
  Rng rng(4);
  const Eigen::Index n = 5000;
  auto z = random_design(n, rng);
  for (Eigen::Index i = 0; i < n; ++i) z.values(i, 2) = 2 * z.values(i, 1) + 0.5 * standard_normal(rng);
  const auto [est, report] = fit(z, "x", {"REL"}, HeadKind::kGaussian, quick());
  const Eigen::MatrixXd out = est.outputs(z.values);
  const Eigen::VectorXd r = z.values.col(1);
  const Eigen::VectorXd mu = out.row(0).transpose();
  const double rc = r.mean(), mc = mu.mean();
  const double slope = ((r.array() - rc) * (mu.array() - mc)).sum() / (r.array() - rc).square().sum();
  CHECK(std::abs(slope - 2.0) < 0.1);
  const double sd = out.row(1).array().exp().mean();
  CHECK(sd >= 0.4);
  CHECK(sd <= 0.6);
}

TEST_CASE("categorical table is recovered") {
  Rng rng(5);
  const Eigen::Index n = 5000;
  auto z = random_design(n, rng);
  const std::array<std::array<double, 3>, 2> table{{{0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}}};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int bin = uniform01(rng) < 0.5 ? 0 : 1;
    z.values(i, 1) = bin == 0 ? -1.0 : 1.0;
    const int m = sample_categorical(table[bin], rng);
    z.values(i, 3) = m;
    z.codes["m"](i) = m;
  }
  const auto [est, report] = fit(z, "m", {"REL"}, HeadKind::kCategorical, quick());
  Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(2, 4);
  probe(0, 1) = -1.0;
  probe(1, 1) = 1.0;
  const Eigen::MatrixXd p = est.probabilities(probe);
  for (int b = 0; b < 2; ++b) {
    CHECK(std::abs(p.col(b).sum() - 1.0) < 1e-6);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(p(k, b) - table[b][k]) < 0.05);
  }
}

TEST_CASE("log_prob at known outputs") {
  Rng rng(6);
  const auto z = random_design(60, rng);
  // gaussian: zero the net so mean 0 and log sd = bias
  auto [g, r1] = fit(z, "x", {"REL"}, HeadKind::kGaussian, quick());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(g.net().num_parameters());
  g.net().set_flat(theta);
  g.net().layers().back().bias(1) = std::log(0.8);
  const Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, 4);
  CHECK(g.log_prob(row, Eigen::VectorXd::Zero(1))(0) ==
        doctest::Approx(-std::log(0.8 * std::sqrt(2 * M_PI))).epsilon(1e-12));

  auto [c, r2] = fit(z, "m", {"REL"}, HeadKind::kCategorical, quick());
  c.net().set_flat(Eigen::VectorXd::Zero(c.net().num_parameters()));
  CHECK(c.log_prob(row, Eigen::VectorXd::Constant(1, 2))(0) == doctest::Approx(std::log(1.0 / 3)));

  auto [b, r3] = fit(z, "CLICK", {"REL"}, HeadKind::kBernoulli, quick());
  b.net().set_flat(Eigen::VectorXd::Zero(b.net().num_parameters()));
  CHECK(b.log_prob(row, Eigen::VectorXd::Ones(1))(0) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("uniform four-way head gives log one quarter") {
  DesignMatrix z;
  z.layout.add("REL", NodeKind::kScore, 1);
  z.layout.add("k", NodeKind::kCategorical, 1, 4);
  ConditionalEstimator est("k", {"REL"}, HeadKind::kCategorical, z.layout, quick());
  est.net().set_flat(Eigen::VectorXd::Zero(est.net().num_parameters()));
  CHECK(est.log_prob(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Constant(1, 3))(0) ==
        doctest::Approx(std::log(0.25)));
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(7);
  const auto z = random_design(80, rng);
  for (auto [target, head] : {std::pair{"x", HeadKind::kGaussian},
                              std::pair{"m", HeadKind::kCategorical},
                              std::pair{"CLICK", HeadKind::kBernoulli}}) {
    ConditionalEstimator est(target, {"REL", std::string(target) == "x" ? "m" : "x"}, head,
                             z.layout, quick(9));
    const Eigen::VectorXd y = est.targets(z);
    Eigen::VectorXd w(80);
    for (Eigen::Index i = 0; i < 80; ++i) w(i) = 0.5 + uniform01(rng);
    Eigen::VectorXd grad;
    est.weighted_loglik(z.values, y, &w, &grad, nullptr);
    const Eigen::VectorXd theta = est.net().flat();
    const double h = 1e-5;
    for (int t = 0; t < 10; ++t) {
      Eigen::Index k = 0;
      do {
        k = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(theta.size()));
      } while (est.net().layers().front().weight.size() > k &&
               est.net().input_mask()(k / est.net().layers().front().weight.rows()) == 0);
      Eigen::VectorXd tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      est.net().set_flat(tp);
      const double fp = est.weighted_loglik(z.values, y, &w, nullptr, nullptr);
      est.net().set_flat(tm);
      const double fm = est.weighted_loglik(z.values, y, &w, nullptr, nullptr);
      est.net().set_flat(theta);
      const double fd = (fp - fm) / (2 * h);
      const double denom = std::max(1e-6, std::abs(fd) + std::abs(grad(k)));
      CHECK(std::abs(fd - grad(k)) / denom < 1e-4);
    }
  }
}

TEST_CASE("non-parent columns never change the fit") {
  Rng rng(8);
  auto z = random_design(300, rng);
  for (Eigen::Index i = 0; i < 300; ++i) z.values(i, 2) = z.values(i, 1) + standard_normal(rng);
  auto h = quick();
  h.max_epochs = 5;
  const auto a = fit(z, "x", {"REL"}, HeadKind::kGaussian, h);
  auto perturbed = z;
  for (Eigen::Index i = 0; i < 300; ++i) {
    perturbed.values(i, 0) = 1 - perturbed.values(i, 0);
    perturbed.values(i, 3) = 7.0 * standard_normal(rng);
  }
  const auto b = fit(perturbed, "x", {"REL"}, HeadKind::kGaussian, h);
  CHECK(a.first.net().flat() == b.first.net().flat());
  CHECK(a.first.log_prob(z) == b.first.log_prob(perturbed));
}

TEST_CASE("estimator JSON round trip") {
  Rng rng(9);
  const auto z = random_design(100, rng);
  auto h = quick();
  h.max_epochs = 2;
  const auto est = fit(z, "m", {"REL", "x"}, HeadKind::kCategorical, h).first;
  const auto back = estimator_from_json(estimator_to_json(est));
  CHECK(back.parents() == est.parents());
  CHECK(back.log_prob(z) == est.log_prob(z));
}

}  // TEST_SUITE
