// Copyright 2026 The qdnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <numbers>

#include "core/error.hpp"
#include "core/outputs.hpp"
#include "oracles.hpp"

using namespace qdnn;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 pi)

Targets labels(std::initializer_list<int> xs) {
  Targets t;
  t.labels = xs;
  return t;
}

Targets values(const Matrix& v) {
  Targets t;
  t.values = v;
  return t;
}

Targets random_targets(const OutputModel& m, Eigen::Index n, Rng& rng) {
  if (m.kind() == OutputKind::categorical) {
    Targets t;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(m.dim()) - 1);
    for (Eigen::Index s = 0; s < n; ++s) t.labels.push_back(pick(rng));
    return t;
  }
  Matrix v = oracle::random_uniform(static_cast<Eigen::Index>(m.dim()), n, rng);
  if (m.kind() == OutputKind::bernoulli) v = (v.array() < 0.5).cast<double>();
  return values(v);
}

}  // namespace

TEST_CASE("loss examples") {
  SUBCASE("categorical uniform over 10 classes") {
    const OutputModel m = OutputModel::categorical(10);
    for (int c : {0, 4, 9}) CHECK(m.loss(Vector(Vector::Zero(10)), labels({c})) == doctest::Approx(std::log(10.0)));
  }
  SUBCASE("gaussian zero residual keeps the normalizer") {
    const OutputModel m = OutputModel::gaussian(4, 1.0);
    const Vector a = Vector::LinSpaced(4, -1, 1);
    CHECK(m.loss(a, values(a)) == doctest::Approx(2.0 * kLog2Pi));
    const OutputModel wide = OutputModel::gaussian(4, 2.0);
    CHECK(wide.loss(a, values(a)) == doctest::Approx(2.0 * kLog2Pi + 4.0 * std::log(2.0)));
  }
  SUBCASE("gaussian residual term") {
    const OutputModel m = OutputModel::gaussian(1, 0.5);
    const Vector a = Vector::Constant(1, 1.0);
    CHECK(m.loss(a, values(Matrix::Constant(1, 1, 0.0))) ==
          doctest::Approx(0.5 * kLog2Pi + std::log(0.5) + 1.0 / (2 * 0.25)));
  }
  SUBCASE("bernoulli saturated fit is bounded by the clamp") {
    const OutputModel m = OutputModel::bernoulli(3);
    Vector a(3);
    a << 60, -60, 60;
    Matrix t(3, 1);
    t << 1, 0, 1;
    const double want = -3.0 * std::log1p(-kBernoulliClamp);
    CHECK(m.loss(a, values(t)) == doctest::Approx(want).epsilon(1e-6));
    CHECK(m.loss(a, values(t)) == doctest::Approx(3 * kBernoulliClamp).epsilon(1e-6));
  }
  SUBCASE("class index out of range") {
    const OutputModel m = OutputModel::categorical(3);
    CHECK_THROWS_AS(m.loss(Vector(Vector::Zero(3)), labels({3})), StructuralError);
    CHECK_THROWS_AS(m.loss(Vector(Vector::Zero(3)), labels({-1})), StructuralError);
  }
}

TEST_CASE("softmax probabilities sum to one") {
  Rng rng = make_rng(1, 0);
  const OutputModel m = OutputModel::categorical(7);
  const Matrix a = 20.0 * Matrix::NullaryExpr(7, 200, [&] { return standard_normal(rng); });
  const Matrix p = m.mean(a);
  CHECK((p.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK((p.array() >= 0.0).all());
}

TEST_CASE("bernoulli means stay inside the clamp") {
  const OutputModel m = OutputModel::bernoulli(2);
  Matrix a(2, 2);
  a << 1000, -1000, 0, 3;
  const Matrix y = m.mean(a);
  CHECK((y.array() >= kBernoulliClamp).all());
  CHECK((y.array() <= 1.0 - kBernoulliClamp).all());
}

TEST_CASE("output gradients") {
  SUBCASE("categorical is p minus the one-hot target") {
    const OutputModel m = OutputModel::categorical(3);
    Matrix a(3, 1);
    a << 0.2, -1.0, 0.7;
    const Matrix p = m.mean(a);
    Matrix want = p;
    want(2, 0) -= 1.0;
    CHECK((m.loss_output_grad(a, labels({2})) - want).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("gaussian is the residual over the variance") {
    const OutputModel m = OutputModel::gaussian(2, 0.5);
    Matrix a(2, 1), t(2, 1);
    a << 1.0, -2.0;
    t << 0.5, 0.0;
    const Matrix g = m.loss_output_grad(a, values(t));
    CHECK(g(0, 0) == doctest::Approx(0.5 / 0.25));
    CHECK(g(1, 0) == doctest::Approx(-2.0 / 0.25));
  }
  SUBCASE("finite differences for all heads") {
    Rng rng = make_rng(2, 0);
    for (const char* name : {"categorical", "gaussian", "gaussian-learned", "bernoulli"}) {
      CAPTURE(name);
      const OutputModel m = OutputModel::parse(name, 4);
      double worst = 0.0;
      for (int trial = 0; trial < 50; ++trial) {
        const Vector a = 2.0 * oracle::random_normal(4, rng);
        const Targets t = random_targets(m, 1, rng);
        const Matrix g = m.loss_output_grad(a, t);
        auto f = [&](const Vector& z) { return m.loss(z, t); };
        for (Eigen::Index k = 0; k < 4; ++k) {
          worst = std::max(worst, oracle::relative_error(g(k, 0), oracle::partial(f, a, k, 1e-6)));
        }
      }
      CHECK(worst <= 1e-6);
    }
  }
}

TEST_CASE("pseudo-target sampling") {
  Rng rng = make_rng(3, 0);
  SUBCASE("degenerate categorical always returns its class") {
    const OutputModel m = OutputModel::categorical(3);
    Matrix a = Matrix::Zero(3, 500);
    a.row(1).setConstant(800.0);
    const Targets t = m.sample_pseudo_targets(a, rng);
    for (int c : t.labels) CHECK(c == 1);
  }
  SUBCASE("floored gaussian stays within four sigma") {
    const OutputModel m = OutputModel::gaussian_learned(3, 1e-6);
    CHECK(m.sigma().minCoeff() == doctest::Approx(kSigmaFloor));
    const Matrix a = Matrix::Constant(3, 2000, 0.3);
    const Targets t = m.sample_pseudo_targets(a, rng);
    const double outside = ((t.values - a).array().abs() > 4 * kSigmaFloor).cast<double>().mean();
    CHECK(outside < 0.001);
  }
  SUBCASE("class frequencies match the probabilities") {
    const OutputModel m = OutputModel::categorical(4);
    Vector a(4);
    a << 0.5, -0.3, 1.2, 0.0;
    const Vector p = m.mean(a).col(0);
    constexpr int kDraws = 100000;
    const Targets t = m.sample_pseudo_targets(a.replicate(1, kDraws), rng);
    Vector freq = Vector::Zero(4);
    for (int c : t.labels) freq[c] += 1.0 / kDraws;
    for (Eigen::Index k = 0; k < 4; ++k) {
      const double se = std::sqrt(p[k] * (1 - p[k]) / kDraws);
      CHECK(std::abs(freq[k] - p[k]) <= 3 * se);
    }
  }
}

TEST_CASE("fisher term enumeration") {
  SUBCASE("categorical two classes at 1/2") {
    const OutputModel m = OutputModel::categorical(2);
    const auto terms = m.enumerate_fisher_terms(Vector::Zero(2));
    REQUIRE(terms.size() == 2);
    for (int k = 0; k < 2; ++k) {
      CHECK(terms[k].weight == doctest::Approx(0.5));
      const Matrix g = m.loss_output_grad(Vector::Zero(2), labels({k}));
      CHECK((terms[k].seed - g.col(0)).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }
  SUBCASE("gaussian unit variance gives unit weights on one-hot seeds") {
    const OutputModel m = OutputModel::gaussian(3, 1.0);
    const auto terms = m.enumerate_fisher_terms(Vector::Constant(3, 0.7));
    REQUIRE(terms.size() == 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(terms[k].weight == 1.0);
      CHECK(terms[k].seed == Vector::Unit(3, k));
    }
  }
  SUBCASE("gaussian weight is the inverse variance") {
    const OutputModel m = OutputModel::gaussian(2, 0.5);
    for (const auto& term : m.enumerate_fisher_terms(Vector::Zero(2))) CHECK(term.weight == doctest::Approx(4.0));
  }
  SUBCASE("bernoulli weight is the inverse mean variance") {
    const OutputModel m = OutputModel::bernoulli(2);
    Vector a(2);
    a << 0.4, -1.1;
    const Vector y = m.mean(a).col(0);
    const auto terms = m.enumerate_fisher_terms(a);
    for (int k = 0; k < 2; ++k) {
      const double v = y[k] * (1 - y[k]);
      CHECK(terms[k].weight == doctest::Approx(1.0 / v));
      CHECK((terms[k].seed - v * Vector::Unit(2, k)).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }
  SUBCASE("categorical weights sum to one") {
    Rng rng = make_rng(4, 0);
    const OutputModel m = OutputModel::categorical(6);
    for (int trial = 0; trial < 100; ++trial) {
      double total = 0.0;
      for (const auto& term : m.enumerate_fisher_terms(5.0 * oracle::random_normal(6, rng))) total += term.weight;
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("output-level fisher matches the pseudo-target expectation") {
  Rng rng = make_rng(5, 0);
  for (const char* name : {"categorical", "gaussian", "bernoulli"}) {
    CAPTURE(name);
    const OutputModel m = OutputModel::parse(name, 3);
    Vector a(3);
    a << 0.3, -0.8, 0.5;
    Matrix exact = Matrix::Zero(3, 3);
    for (const auto& term : m.enumerate_fisher_terms(a)) exact += term.weight * term.seed * term.seed.transpose();
    if (m.kind() == OutputKind::categorical) {
      // closed form diag(p) - p p^T
      const Vector p = m.mean(a).col(0);
      const Matrix closed = Matrix(p.asDiagonal()) - p * p.transpose();
      CHECK((exact - closed).cwiseAbs().maxCoeff() <= 1e-14);
    }
    constexpr int kDraws = 100000;
    const Matrix big = a.replicate(1, kDraws);
    const Matrix g = m.loss_output_grad(big, m.sample_pseudo_targets(big, rng));
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const Vector prod = g.row(i).cwiseProduct(g.row(j)).transpose();
        const double mean = prod.mean();
        const double se = std::sqrt((prod.array() - mean).square().sum() / (kDraws - 1.0) / kDraws);
        CHECK(std::abs(mean - exact(i, j)) <= 3 * se + 1e-12);
      }
    }
  }
}

TEST_CASE("learned variance") {
  SUBCASE("projection keeps sigma above the floor") {
    OutputModel m = OutputModel::gaussian_learned(3, 1.0);
    Vector s(3);
    s << -10.0, std::log(0.5), std::log(1.0 / 300.0);
    m.set_log_sigma(s);
    const Vector sig = m.sigma();
    CHECK(sig[0] == doctest::Approx(kSigmaFloor));
    CHECK(sig[1] == doctest::Approx(0.5));
    CHECK(sig[2] == doctest::Approx(kSigmaFloor));
    m.step_log_sigma(Vector::Constant(3, 100.0), 1.0);
    CHECK(m.sigma().minCoeff() == doctest::Approx(kSigmaFloor));
  }
  SUBCASE("log sigma gradient matches finite differences") {
    Rng rng = make_rng(6, 0);
    OutputModel m = OutputModel::gaussian_learned(2, 0.7);
    const Matrix a = oracle::random_normal(2, rng).replicate(1, 1);
    const Targets t = values(oracle::random_uniform(2, 1, rng));
    const Vector g = m.log_sigma_grad(a, t);
    auto f = [&](const Vector& s) {
      OutputModel probe = m;
      probe.set_log_sigma(s);
      return probe.loss(a, t).mean();
    };
    for (Eigen::Index k = 0; k < 2; ++k) {
      CHECK(oracle::relative_error(g[k], oracle::partial(f, m.log_sigma(), k, 1e-6)) <= 1e-6);
    }
  }
  SUBCASE("fixed variance heads reject the variance gradient") {
    const OutputModel m = OutputModel::gaussian(2, 1.0);
    CHECK_THROWS_AS(m.log_sigma_grad(Matrix::Zero(2, 1), values(Matrix::Zero(2, 1))), StructuralError);
  }
}

TEST_CASE("error counts") {
  const OutputModel cat = OutputModel::categorical(3);
  Matrix a(3, 3);
  a << 1, 0, 0,  //
      0, 1, 0,   //
      0, 0, 1;
  CHECK(cat.error_sum(a, labels({0, 1, 0})) == 1.0);
  const OutputModel g = OutputModel::gaussian(2, 1.0);
  Matrix t = Matrix::Zero(2, 3);
  CHECK(g.error_sum(a.topRows(2), values(t)) == 2.0);
}
