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

#include <sstream>

#include "core/error.hpp"
#include "core/qdmetric.hpp"
#include "oracles.hpp"

using namespace qdnn;

namespace {

QDMetric one_block(std::size_t n, MetricMode mode = MetricMode::quasi_diagonal) {
  const std::size_t len[] = {n};
  return QDMetric(BlockLayout::from_lengths(len), mode);
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Random metric built from `terms` weighted rank-one updates.
QDMetric random_metric(const std::vector<std::size_t>& lengths, int terms, Rng& rng,
                       MetricMode mode = MetricMode::quasi_diagonal) {
  QDMetric m(BlockLayout::from_lengths(lengths), mode);
  for (int k = 0; k < terms; ++k) {
    const Vector u = oracle::random_normal(static_cast<Eigen::Index>(m.dim()), rng);
    m.rank_one_update(as_span(u), 0.2 + uniform01(rng));
  }
  return m;
}

bool clamp_inactive(const QDMetric& m, double eps, double margin) {
  for (const auto& b : m.layout().blocks()) {
    for (std::size_t i = 1; i < b.length; ++i) {
      const double r = m.row()[b.offset + i];
      if ((m.diag()[b.offset] + eps) * (m.diag()[b.offset + i] + eps) - r * r <= margin) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("block layout covers every index once") {
  const std::size_t lengths[] = {3, 1, 4};
  const BlockLayout l = BlockLayout::from_lengths(lengths);
  CHECK(l.size() == 8);
  CHECK(l.num_blocks() == 3);
  CHECK(l.block(2).offset == 4);
  CHECK_THROWS_AS(BlockLayout({{0, 2}, {3, 1}}), StructuralError);  // gap
  CHECK_THROWS_AS(BlockLayout({{0, 2}, {1, 2}}), StructuralError);  // overlap
  CHECK_THROWS_AS(BlockLayout({{0, 0}}), StructuralError);          // empty block
  BlockLayout grown;
  grown.append(3);
  grown.append(1);
  grown.append(4);
  CHECK(grown == l);
}

TEST_CASE("metric config bounds") {
  CHECK_NOTHROW((MetricConfig{1.0, 0.0}.validate()));
  CHECK_THROWS_AS((MetricConfig{0.0, 1e-8}.validate()), ConfigError);
  CHECK_THROWS_AS((MetricConfig{1.5, 1e-8}.validate()), ConfigError);
  CHECK_THROWS_AS((MetricConfig{0.5, -1.0}.validate()), ConfigError);
}

TEST_CASE("rank-one update examples") {
  SUBCASE("n=2, v=[1,2], alpha=1") {
    QDMetric m = one_block(2);
    const Vector v = vec({1, 2});
    m.rank_one_update(as_span(v), 1.0);
    CHECK(m.diag()[0] == 1.0);
    CHECK(m.diag()[1] == 4.0);
    CHECK(m.row()[1] == 2.0);
  }
  SUBCASE("alpha = 0 leaves the metric unchanged") {
    Rng rng = make_rng(3, 0);
    QDMetric m = random_metric({3, 2}, 3, rng);
    const QDMetric before = m;
    const Vector v = oracle::random_normal(5, rng);
    m.rank_one_update(as_span(v), 0.0);
    CHECK(oracle::dense_qd(m) == oracle::dense_qd(before));
  }
  SUBCASE("n=3 against the dense outer product") {
    QDMetric m = one_block(3);
    const Vector v = vec({2, -1, 3});
    m.rank_one_update(as_span(v), 0.5);
    const Matrix dense = 0.5 * v * v.transpose();
    for (int i = 0; i < 3; ++i) CHECK(m.diag()[i] == doctest::Approx(dense(i, i)));
    CHECK(m.row()[1] == doctest::Approx(dense(0, 1)));
    CHECK(m.row()[2] == doctest::Approx(dense(0, 2)));
    CHECK(m.row()[0] == 0.0);  // never written
  }
  SUBCASE("size mismatch") {
    QDMetric m = one_block(3);
    const Vector v = vec({1, 2});
    CHECK_THROWS_AS(m.rank_one_update(as_span(v), 1.0), StructuralError);
  }
}

TEST_CASE("decay examples") {
  QDMetric m = one_block(2);
  m.mutable_diag()[0] = 2;
  m.mutable_diag()[1] = 4;
  m.mutable_row()[1] = 1;
  SUBCASE("gamma = 1 clears") {
    m.decay(1.0);
    CHECK(m.diag()[0] == 0.0);
    CHECK(m.diag()[1] == 0.0);
  }
  SUBCASE("gamma = 0 keeps") {
    m.decay(0.0);
    CHECK(m.diag()[0] == 2.0);
    CHECK(m.row()[1] == 1.0);
  }
  SUBCASE("gamma = 0.01") {
    m.decay(0.01);
    CHECK(m.diag()[0] == doctest::Approx(1.98).epsilon(1e-15));
    CHECK(m.diag()[1] == doctest::Approx(3.96).epsilon(1e-15));
    CHECK(m.row()[1] == doctest::Approx(0.99).epsilon(1e-15));
  }
  CHECK_THROWS_AS(m.decay(-0.1), ConfigError);
  CHECK_THROWS_AS(m.decay(1.1), ConfigError);
}

TEST_CASE("solve examples") {
  SUBCASE("identity returns v") {
    const std::size_t lengths[] = {3, 2};
    const QDMetric m = QDMetric::identity(BlockLayout::from_lengths(lengths), MetricMode::quasi_diagonal);
    const Vector v = vec({1, -2, 3, 0.5, 7});
    CHECK(m.solve(as_span(v), 0.0) == v);
  }
  SUBCASE("n=2 exact 2x2 system") {
    QDMetric m = one_block(2);
    m.mutable_diag()[0] = 2;
    m.mutable_diag()[1] = 3;
    m.mutable_row()[1] = 1;
    const Vector v = vec({1, 1});
    const Vector got = m.solve(as_span(v), 0.0);
    const Eigen::Vector2d dense = (Eigen::Matrix2d{{2, 1}, {1, 3}}).fullPivLu().solve(Eigen::Vector2d(1, 1));
    CHECK(got[0] == doctest::Approx(dense[0]).epsilon(1e-14));
    CHECK(got[1] == doctest::Approx(dense[1]).epsilon(1e-14));
    CHECK(got[0] == doctest::Approx(0.4));
    CHECK(got[1] == doctest::Approx(0.2));
  }
  SUBCASE("negative determinant is clamped to epsilon") {
    QDMetric m = one_block(2);
    m.mutable_diag()[0] = 1;
    m.mutable_diag()[1] = 1;
    m.mutable_row()[1] = 2;
    const Vector v = vec({0, 1});
    const Vector got = m.solve(as_span(v), 1e-8);
    // numerator (1 + eps) * 1 - 2 * 0 over the clamp eps
    CHECK(got[1] == doctest::Approx((1 + 1e-8) / 1e-8).epsilon(1e-12));
    CHECK(got[0] == doctest::Approx(-2 * got[1] / (1 + 1e-8)).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(1e8).epsilon(1e-7));
  }
  SUBCASE("zero bias curvature without regularization") {
    QDMetric m = one_block(2);
    const Vector v = vec({1, 1});
    CHECK_THROWS_AS(m.solve(as_span(v), 0.0), NumericError);
  }
  SUBCASE("length-1 block is scalar division") {
    QDMetric m = one_block(1);
    m.mutable_diag()[0] = 4;
    const Vector v = vec({2});
    CHECK(m.solve(as_span(v), 0.0)[0] == 0.5);
  }
  SUBCASE("diagonal mode divides by diag + eps") {
    Rng rng = make_rng(5, 0);
    const QDMetric m = random_metric({3, 4}, 3, rng, MetricMode::diagonal);
    const Vector v = oracle::random_normal(7, rng);
    const Vector got = m.solve(as_span(v), 0.25);
    for (Eigen::Index i = 0; i < 7; ++i) CHECK(got[i] == doctest::Approx(v[i] / (m.diag()[i] + 0.25)));
  }
}

TEST_CASE("qd_reduce examples") {
  SUBCASE("identity") {
    const std::size_t len[] = {3};
    const QDMetric m = qd_reduce(Matrix::Identity(3, 3), BlockLayout::from_lengths(len));
    for (int i = 0; i < 3; ++i) CHECK(m.diag()[i] == 1.0);
    for (int i = 1; i < 3; ++i) CHECK(m.row()[i] == 0.0);
  }
  SUBCASE("outer product matches rank-one update") {
    const Vector v = vec({1, 2, 3});
    const std::size_t len[] = {3};
    const QDMetric a = qd_reduce(v * v.transpose(), BlockLayout::from_lengths(len));
    QDMetric b = one_block(3);
    b.rank_one_update(as_span(v), 1.0);
    CHECK(oracle::dense_qd(a) == oracle::dense_qd(b));
  }
  SUBCASE("random symmetric 5x5 with two blocks") {
    Rng rng = make_rng(8, 0);
    Matrix a = Matrix::NullaryExpr(5, 5, [&] { return standard_normal(rng); });
    a = (a + a.transpose()).eval();
    const std::size_t len[] = {3, 2};
    const QDMetric m = qd_reduce(a, BlockLayout::from_lengths(len));
    for (int i = 0; i < 5; ++i) CHECK(m.diag()[i] == a(i, i));
    CHECK(m.row()[1] == a(0, 1));
    CHECK(m.row()[2] == a(0, 2));
    CHECK(m.row()[4] == a(3, 4));
  }
  SUBCASE("dimension mismatch") {
    const std::size_t len[] = {3};
    CHECK_THROWS_AS(qd_reduce(Matrix::Identity(4, 4), BlockLayout::from_lengths(len)), StructuralError);
  }
}

TEST_CASE("length-2 blocks solve exactly") {
  Rng rng = make_rng(11, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const QDMetric m = random_metric({2, 2, 2}, 3, rng);
    if (!clamp_inactive(m, 1e-12, 1e-6)) continue;
    const Vector v = oracle::random_normal(6, rng);
    const Vector got = m.solve(as_span(v), 1e-12);
    const Matrix dense = oracle::dense_qd(m) + 1e-12 * Matrix::Identity(6, 6);
    const Vector want = dense.fullPivLu().solve(v);
    worst = std::max(worst, (got - want).norm() / want.norm());
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("general blocks match the pairwise oracle") {
  Rng rng = make_rng(12, 0);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  double worst = 0.0;
  int used = 0;
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<std::size_t> lengths(3);
    for (auto& l : lengths) l = len(rng);
    const QDMetric m = random_metric(lengths, 4, rng);
    if (!clamp_inactive(m, 0.0, 1e-6)) continue;
    const Vector v = oracle::random_normal(static_cast<Eigen::Index>(m.dim()), rng);
    const Vector got = m.solve(as_span(v), 0.0);
    const Vector want = oracle::pairwise_solve(m, v, 0.0);
    worst = std::max(worst, (got - want).norm() / want.norm());
    ++used;
  }
  CHECK(used > 300);
  CHECK(worst <= 1e-8);
}

TEST_CASE("accumulation is linear in alpha") {
  Rng rng = make_rng(13, 0);
  const Vector v = oracle::random_normal(9, rng);
  QDMetric twice = random_metric({4, 5}, 2, rng);
  QDMetric once = twice;
  twice.rank_one_update(as_span(v), 0.3);
  twice.rank_one_update(as_span(v), 1.7);
  once.rank_one_update(as_span(v), 2.0);
  const Matrix a = oracle::dense_qd(twice), b = oracle::dense_qd(once);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * b.cwiseAbs().maxCoeff());
}

TEST_CASE("decay then update gives the moving average") {
  Rng rng = make_rng(14, 0);
  QDMetric m = random_metric({3, 3}, 3, rng);
  const Vector old(Eigen::Map<const Vector>(m.diag().data(), 6));
  const Vector v = oracle::random_normal(6, rng);
  const double gamma = 0.01;
  m.decay(gamma);
  m.rank_one_update(as_span(v), gamma);
  for (Eigen::Index i = 0; i < 6; ++i) {
    CHECK(m.diag()[i] == doctest::Approx((1 - gamma) * old[i] + gamma * v[i] * v[i]).epsilon(1e-14));
  }
}

TEST_CASE("batched accumulate equals a sum of rank-one updates") {
  Rng rng = make_rng(15, 0);
  QDMetric a = random_metric({3, 2, 4}, 2, rng);
  QDMetric b = a;
  Vector diag = Vector::Zero(9), row = Vector::Zero(9);
  for (int s = 0; s < 5; ++s) {
    const Vector v = oracle::random_normal(9, rng);
    a.rank_one_update(as_span(v), 0.4 / 5);
    for (const auto& blk : b.layout().blocks()) {
      for (std::size_t i = 0; i < blk.length; ++i) {
        const auto g = static_cast<Eigen::Index>(blk.offset + i);
        diag[g] += v[g] * v[g];
        row[g] += v[static_cast<Eigen::Index>(blk.offset)] * v[g];
      }
    }
  }
  b.accumulate(as_span(diag), as_span(row), 0.4 / 5);
  CHECK((oracle::dense_qd(a) - oracle::dense_qd(b)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("storage and sign invariants") {
  Rng rng = make_rng(16, 0);
  const QDMetric q = random_metric({5, 5, 1}, 1, rng);
  CHECK(q.stored_reals() <= 2 * q.dim());
  for (MetricMode mode : {MetricMode::quasi_diagonal, MetricMode::diagonal}) {
    QDMetric m(BlockLayout({{0, 4}, {4, 3}}), mode);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int step = 0; step < 200; ++step) {
      if (u(rng) < 0.3) {
        m.decay(u(rng));
      } else {
        const Vector v = 10.0 * oracle::random_normal(7, rng);
        m.rank_one_update(as_span(v), u(rng));
      }
      for (double d : m.diag()) REQUIRE(d >= 0.0);
    }
    if (mode == MetricMode::diagonal) {
      for (double r : m.row()) CHECK(r == 0.0);
    }
  }
}

TEST_CASE("csv dump lists diag then row per block") {
  QDMetric m = one_block(3);
  const Vector v = vec({1, 2, 3});
  m.rank_one_update(as_span(v), 1.0);
  std::ostringstream os;
  m.write_csv(os);
  CHECK(os.str() == "1,4,9,2,3\n");
}
