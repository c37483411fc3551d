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

#include "core/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "core/error.hpp"
#include "core/network.hpp"
#include "core/optim.hpp"
#include "core/outputs.hpp"
#include "core/qdmetric.hpp"
#include "core/random.hpp"

namespace qdnn {

namespace {

VerifyCheck at_most(std::string name, double value, double bound) {
  return {std::move(name), value, bound, value <= bound};
}

VerifyCheck at_least(std::string name, double value, double bound) {
  return {std::move(name), value, bound, value >= bound};
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform01(rng);
  }
  return m;
}

Targets random_targets(const OutputModel& model, Eigen::Index n, Rng& rng) {
  Targets t;
  if (model.kind() == OutputKind::categorical) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(model.dim()) - 1);
    for (Eigen::Index s = 0; s < n; ++s) t.labels.push_back(pick(rng));
  } else {
    t.values = uniform_matrix(static_cast<Eigen::Index>(model.dim()), n, rng);
  }
  return t;
}

// Image-like inputs: most coordinates dark, the rest uniform in [0,1].
Matrix sparse_inputs(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m = uniform_matrix(rows, cols, rng);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (uniform01(rng) < 0.7) m(i, j) = 0.0;
    }
  }
  return m;
}

Network random_net(std::vector<std::size_t> sizes, Activation act, Rng& rng) {
  Network net(std::move(sizes), act);
  net.init_params(rng);
  // nonzero biases so every path is exercised
  Vector& p = net.mutable_params();
  for (const auto& b : net.layout().blocks()) p[static_cast<Eigen::Index>(b.offset)] = standard_normal(rng) * 0.5;
  return net;
}

double max_output_gap(const Network& a, const Matrix& xa, const Network& b, const Matrix& xb) {
  return (a.predict(xa) - b.predict(xb)).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- gradcheck

VerifyReport gradcheck() {
  VerifyReport rep{"gradcheck", {}};
  Rng rng = make_rng(20150101, 11);
  const std::size_t in = 5, hidden = 4, out = 3;
  constexpr double h = 1e-5;
  for (Activation act : {Activation::sigmoid, Activation::tanh, Activation::relu}) {
    for (const char* head : {"categorical", "gaussian", "bernoulli"}) {
      const OutputModel model = OutputModel::parse(head, out);
      Network net = random_net({in, hidden, hidden, out}, act, rng);
      const Matrix x = uniform_matrix(in, 4, rng);
      const Targets t = random_targets(model, 4, rng);
      const ForwardTrace trace = net.forward(x, Mode::eval, nullptr);
      const Vector grad = net.backprop(trace, model.loss_output_grad(trace.output(), t));
      auto total = [&](const Vector& p) {
        Network probe = net;
        probe.set_params(as_span(p));
        return model.loss(probe.predict(x), t).sum();
      };
      const Vector p0 = net.params();
      double worst = 0.0;
      std::size_t checked = 0;
      std::uniform_int_distribution<Eigen::Index> pick(0, p0.size() - 1);
      for (int c = 0; c < 120; ++c) {
        const Eigen::Index i = c < p0.size() ? c : pick(rng);
        Vector plus = p0, minus = p0;
        plus[i] += h;
        minus[i] -= h;
        const double fd = (total(plus) - total(minus)) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-3});
        worst = std::max(worst, std::abs(fd - grad[i]) / denom);
        ++checked;
      }
      std::ostringstream name;
      name << to_string(act) << "/" << head << " max relative error over " << checked << " coordinates";
      rep.checks.push_back(at_most(name.str(), worst, 1e-5));
    }
  }
  return rep;
}

// ----------------------------------------------------------- qdsolve-oracle

// Per pair (0, i): the 2x2 system [[d0, r], [r, di]] fixes w_i; w_0 then
// follows from the first row of the block.
Vector pairwise_oracle(const QDMetric& m, const Vector& v, double eps) {
  Vector w(v.size());
  for (const auto& b : m.layout().blocks()) {
    const auto o = static_cast<Eigen::Index>(b.offset);
    const double d0 = m.diag()[b.offset] + eps;
    for (std::size_t i = 1; i < b.length; ++i) {
      Eigen::Matrix2d a;
      const double r = m.row()[b.offset + i];
      a << d0, r, r, m.diag()[b.offset + i] + eps;
      const Eigen::Vector2d sol = a.fullPivLu().solve(Eigen::Vector2d(v[o], v[o + static_cast<Eigen::Index>(i)]));
      w[o + static_cast<Eigen::Index>(i)] = sol[1];
    }
    double acc = v[o];
    for (std::size_t i = 1; i < b.length; ++i) acc -= m.row()[b.offset + i] * w[o + static_cast<Eigen::Index>(i)];
    w[o] = acc / d0;
  }
  return w;
}

VerifyReport qdsolve_oracle() {
  VerifyReport rep{"qdsolve-oracle", {}};
  Rng rng = make_rng(20150101, 12);
  std::uniform_int_distribution<std::size_t> len(2, 6), terms(3, 6), nblocks(1, 4);
  double worst_pair = 0.0, worst_dense = 0.0;
  int cases = 0, pair2 = 0;
  const double eps = 1e-12;
  while (cases < 1000) {
    std::vector<std::size_t> lengths(nblocks(rng));
    for (auto& l : lengths) l = len(rng);
    QDMetric m(BlockLayout::from_lengths(lengths), MetricMode::quasi_diagonal);
    const auto n = static_cast<Eigen::Index>(m.dim());
    const std::size_t k = terms(rng);
    for (std::size_t j = 0; j < k; ++j) {
      Vector u(n);
      for (Eigen::Index i = 0; i < n; ++i) u[i] = standard_normal(rng);
      m.rank_one_update(as_span(u), 0.1 + uniform01(rng));
    }
    bool clamp = false;
    for (const auto& b : m.layout().blocks()) {
      for (std::size_t i = 1; i < b.length; ++i) {
        const double r = m.row()[b.offset + i];
        const double det = (m.diag()[b.offset] + eps) * (m.diag()[b.offset + i] + eps) - r * r;
        if (det <= 1e-6) clamp = true;
      }
    }
    if (clamp) continue;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = standard_normal(rng);
    const Vector got = m.solve(as_span(v), eps);
    const Vector want = pairwise_oracle(m, v, eps);
    worst_pair = std::max(worst_pair, (got - want).norm() / want.norm());
    for (const auto& b : m.layout().blocks()) {
      if (b.length != 2) continue;
      const auto o = static_cast<Eigen::Index>(b.offset);
      Eigen::Matrix2d a;
      a << m.diag()[b.offset] + eps, m.row()[b.offset + 1], m.row()[b.offset + 1], m.diag()[b.offset + 1] + eps;
      const Eigen::Vector2d exact = a.ldlt().solve(v.segment<2>(o));
      worst_dense = std::max(worst_dense, (got.segment<2>(o) - exact).norm() / exact.norm());
      ++pair2;
    }
    ++cases;
  }
  rep.checks.push_back(at_most("1000 random metrics: max relative error vs pairwise 2x2 oracle", worst_pair, 1e-8));
  rep.checks.push_back(at_most("length-2 blocks (" + std::to_string(pair2) + "): max relative error vs dense solve",
                               worst_dense, 1e-10));
  return rep;
}

// ------------------------------------------------------- fisher-consistency

// Dense outer-product of a parameter gradient.
Matrix outer(const Vector& g) { return g * g.transpose(); }

VerifyCheck fisher_vs_mc(const char* head, Rng& rng) {
  const OutputModel model = OutputModel::parse(head, 3);
  Network net = random_net({4, 2, 3}, Activation::sigmoid, rng);
  const Matrix x = uniform_matrix(4, 1, rng);
  const ForwardTrace trace = net.forward(x, Mode::eval, nullptr);
  const Vector a = trace.output().col(0);
  const auto n = static_cast<Eigen::Index>(net.num_params());

  Matrix exact = Matrix::Zero(n, n);
  for (const FisherTerm& term : model.enumerate_fisher_terms(a)) {
    exact += term.weight * outer(net.backprop(trace, term.seed));
  }

  constexpr int kDraws = 100000;
  Matrix sum = Matrix::Zero(n, n), sq = Matrix::Zero(n, n);
  for (int s = 0; s < kDraws; ++s) {
    const Targets pseudo = model.sample_pseudo_targets(trace.output(), rng);
    const Matrix o = outer(net.backprop(trace, model.loss_output_grad(trace.output(), pseudo)));
    sum += o;
    sq += o.cwiseProduct(o);
  }
  const Matrix mean = sum / kDraws;
  const Matrix var = (sq / kDraws - mean.cwiseProduct(mean)).cwiseMax(0.0);
  const Matrix se = (var / (kDraws - 1.0)).cwiseSqrt();
  // largest deviation in units of the entry's standard error
  double worst = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double gap = std::abs(mean(i, j) - exact(i, j));
      if (gap <= 1e-12) continue;
      worst = std::max(worst, se(i, j) > 0 ? gap / se(i, j) : INFINITY);
    }
  }
  return at_most(std::string("4-2-3 ") + head + ": max |exact - MC| in standard errors (1e5 draws)", worst, 3.0);
}

VerifyReport fisher_consistency() {
  VerifyReport rep{"fisher-consistency", {}};
  Rng rng = make_rng(20150101, 13);
  rep.checks.push_back(fisher_vs_mc("categorical", rng));
  rep.checks.push_back(fisher_vs_mc("gaussian", rng));
  double worst = 0.0;
  const OutputModel cat = OutputModel::categorical(5);
  for (int s = 0; s < 100; ++s) {
    Vector a(5);
    for (Eigen::Index i = 0; i < 5; ++i) a[i] = 4 * standard_normal(rng);
    double total = 0.0;
    for (const auto& term : cat.enumerate_fisher_terms(a)) total += term.weight;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  rep.checks.push_back(at_most("categorical term weights: max |sum - 1|", worst, 1e-12));
  return rep;
}

// ---------------------------------------------------------------- invariance

Network step_once(Network net, Algo algo, double eta, const Matrix& x, const Targets& t) {
  OutputModel model = OutputModel::categorical(net.output_size());
  OptimizerConfig cfg;
  cfg.algo = algo;
  cfg.eta = eta;
  cfg.epsilon = 0.0;
  cfg.gamma = 1.0;
  Optimizer opt(cfg, net.layout());
  Rng rng = make_rng(7, 3);
  opt.step(net, model, x, t, rng);
  return net;
}

double max_relative_gap(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(a.cwiseAbs().maxCoeff(), 1e-300);
}

VerifyReport invariance() {
  VerifyReport rep{"invariance", {}};
  Rng rng = make_rng(20150101, 14);
  Network net = random_net({6, 5, 4, 3}, Activation::sigmoid, rng);
  const OutputModel model = OutputModel::categorical(3);
  const Matrix x = sparse_inputs(6, 32, rng);
  const Targets t = random_targets(model, 32, rng);
  const Matrix probe = sparse_inputs(6, 100, rng);
  const Matrix ones = Matrix::Ones(6, 32), probe_ones = Matrix::Ones(6, 100);
  const double eta = 1.0;

  for (Algo algo : {Algo::qdop, Algo::qdmcnat, Algo::qdnat}) {
    const Network a = step_once(net, algo, eta, x, t);
    const Network b = step_once(sigmoid_to_tanh(net), algo, eta, x, t);
    rep.checks.push_back(at_most(std::string(to_string(algo)) + " sigmoid->tanh: max output gap on 100 probes",
                                 max_output_gap(a, probe, b, probe), 1e-6));
    const Network c = step_once(invert_inputs(net), algo, eta, ones - x, t);
    rep.checks.push_back(at_most(std::string(to_string(algo)) + " inputs x->1-x: max output gap on 100 probes",
                                 max_output_gap(a, probe, c, probe_ones - probe), 1e-6));
  }
  {
    const Network a = step_once(net, Algo::sgd, eta, x, t);
    const Network b = step_once(sigmoid_to_tanh(net), Algo::sgd, eta, x, t);
    rep.checks.push_back(at_least("sgd sigmoid->tanh: max output gap (non-invariance witness)",
                                  max_output_gap(a, probe, b, probe), 1e-3));
    const Network c = step_once(invert_inputs(net), Algo::sgd, eta, ones - x, t);
    rep.checks.push_back(at_least("sgd inputs x->1-x: max output gap (non-invariance witness)",
                                  max_output_gap(a, probe, c, probe_ones - probe), 1e-3));
  }

  // Rescale input coordinate j by c over 10 steps of diagonal methods.
  const std::size_t j = 2;
  const double c = 10.0;
  Matrix xs = x;
  xs.row(static_cast<Eigen::Index>(j)) *= c;
  for (Algo algo : {Algo::dop, Algo::dmcnat, Algo::dnat, Algo::adagrad}) {
    OptimizerConfig cfg;
    cfg.algo = algo;
    cfg.eta = 0.05;
    cfg.epsilon = 0.0;
    cfg.gamma = 0.1;
    Network base = net;
    Network scaled = rescale_input(net, j, c);
    OutputModel m1 = model, m2 = model;
    Optimizer o1(cfg, base.layout()), o2(cfg, scaled.layout());
    Rng r1 = make_rng(9, 3), r2 = make_rng(9, 3);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
      const Eigen::Index off = (s * 8) % 32;
      Targets ts;
      ts.labels.assign(t.labels.begin() + off, t.labels.begin() + off + 8);
      o1.step(base, m1, x.middleCols(off, 8), ts, r1);
      o2.step(scaled, m2, xs.middleCols(off, 8), ts, r2);
      worst = std::max(worst, max_relative_gap(rescale_input(base, j, c).params(), scaled.params()));
    }
    const std::string name = std::string(to_string(algo)) + " input x" + std::to_string(j) +
                             " scaled by 10: max relative parameter gap over 10 steps";
    if (algo == Algo::adagrad) {
      rep.checks.push_back(at_least(name + " (must differ)", worst, 1e-3));
    } else {
      rep.checks.push_back(at_most(name, worst, 1e-6));
    }
  }
  return rep;
}

// -------------------------------------------------------------- op-quadratic

// One bias-only gaussian unit with every target at 0: loss theta^2 / 2.
std::vector<double> quadratic_iterates(Algo algo, double theta0, double eta, int steps) {
  Network net({0, 1}, Activation::identity);
  net.mutable_params()[0] = theta0;
  OutputModel model = OutputModel::gaussian(1, 1.0);
  OptimizerConfig cfg;
  cfg.algo = algo;
  cfg.eta = eta;
  cfg.gamma = 1.0;
  cfg.epsilon = 0.0;
  Optimizer opt(cfg, net.layout());
  Rng rng = make_rng(1, 3);
  const Matrix x(0, 1);
  Targets t;
  t.values = Matrix::Zero(1, 1);
  std::vector<double> out{theta0};
  for (int s = 0; s < steps; ++s) {
    opt.step(net, model, x, t, rng);
    out.push_back(net.params()[0]);
  }
  return out;
}

VerifyReport op_quadratic() {
  VerifyReport rep{"op-quadratic", {}};
  const double theta0 = 1e-3, eta = 0.1;
  const auto op = quadratic_iterates(Algo::qdop, theta0, eta, 10);
  rep.checks.push_back(at_least("op first step: -theta1/theta0 (jump past 0)", -op[1] / op[0], 10.0));
  bool monotone = true;
  for (std::size_t i = 1; i < op.size(); ++i) monotone = monotone && std::abs(op[i]) < std::abs(op[i - 1]);
  rep.checks.push_back(at_least("op iterates fail to contract monotonically (1 = yes)", monotone ? 0.0 : 1.0, 1.0));
  const auto nat = quadratic_iterates(Algo::qdnat, theta0, eta, 50);
  double worst = 0.0;
  for (std::size_t i = 1; i < nat.size(); ++i) {
    worst = std::max(worst, std::abs(nat[i] - (1 - eta) * nat[i - 1]) / std::abs(nat[i - 1]));
  }
  rep.checks.push_back(at_most("natural: max relative gap to (1-eta) theta over 50 steps", worst, 1e-14));
  return rep;
}

}  // namespace

bool VerifyReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

std::string VerifyReport::text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e (bound %.1e)", c.value, c.threshold);
    os << (c.passed ? "PASS " : "FAIL ") << suite << ": " << c.name << " = " << buf << '\n';
  }
  os << suite << ": " << (passed() ? "passed" : "FAILED") << '\n';
  return os.str();
}

const std::vector<std::string_view>& verify_suites() {
  static const std::vector<std::string_view> names{"gradcheck", "qdsolve-oracle", "fisher-consistency",
                                                   "invariance", "op-quadratic"};
  return names;
}

VerifyReport cmd_verify(std::string_view suite) {
  if (suite == "gradcheck") return gradcheck();
  if (suite == "qdsolve-oracle") return qdsolve_oracle();
  if (suite == "fisher-consistency") return fisher_consistency();
  if (suite == "invariance") return invariance();
  if (suite == "op-quadratic") return op_quadratic();
  throw ConfigError("unknown verify suite '" + std::string(suite) + "'");
}

}  // namespace qdnn
