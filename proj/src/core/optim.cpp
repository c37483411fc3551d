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

#include "core/optim.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "core/error.hpp"

namespace qdnn {

Algo parse_algo(std::string_view name) {
  if (name == "sgd") return Algo::sgd;
  if (name == "adagrad") return Algo::adagrad;
  if (name == "dop") return Algo::dop;
  if (name == "qdop") return Algo::qdop;
  if (name == "dmcnat") return Algo::dmcnat;
  if (name == "qdmcnat") return Algo::qdmcnat;
  if (name == "dnat") return Algo::dnat;
  if (name == "qdnat") return Algo::qdnat;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(Algo a) {
  switch (a) {
    case Algo::sgd: return "sgd";
    case Algo::adagrad: return "adagrad";
    case Algo::dop: return "dop";
    case Algo::qdop: return "qdop";
    case Algo::dmcnat: return "dmcnat";
    case Algo::qdmcnat: return "qdmcnat";
    case Algo::dnat: return "dnat";
    case Algo::qdnat: return "qdnat";
  }
  return "?";
}

bool uses_metric(Algo a) { return a != Algo::sgd; }

MetricMode metric_mode(Algo a) {
  switch (a) {
    case Algo::qdop:
    case Algo::qdmcnat:
    case Algo::qdnat:
      return MetricMode::quasi_diagonal;
    default:
      return MetricMode::diagonal;
  }
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("step-size eta must be finite and > 0");
  MetricConfig{gamma, epsilon}.validate();
  if (n_mc < 1) throw ConfigError("n_mc must be >= 1");
}

void step_sgd(std::span<double> params, std::span<const double> grad_mean, double eta) {
  if (params.size() != grad_mean.size()) throw StructuralError("step_sgd: size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= eta * grad_mean[i];
}

void step_adagrad(std::span<double> params, std::span<const double> grad_mean,
                  const QDMetric& accumulator, double eta, double epsilon) {
  if (params.size() != grad_mean.size() || params.size() != accumulator.dim()) {
    throw StructuralError("step_adagrad: size mismatch");
  }
  const auto diag = accumulator.diag();
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= eta * grad_mean[i] / std::sqrt(diag[i] + epsilon);
  }
}

Optimizer::Optimizer(OptimizerConfig cfg, const BlockLayout& layout) : cfg_(cfg) {
  cfg_.validate();
  if (uses_metric(cfg_.algo)) metric_.emplace(layout, metric_mode(cfg_.algo));
}

const QDMetric& Optimizer::metric() const {
  if (!metric_) throw StructuralError("optimizer: sgd keeps no metric");
  return *metric_;
}

void Optimizer::freeze_metric(QDMetric m) {
  if (!metric_) throw StructuralError("optimizer: sgd keeps no metric");
  if (!(m.layout() == metric_->layout())) throw StructuralError("freeze_metric: layout mismatch");
  m.set_initialized(true);
  metric_ = std::move(m);
  frozen_ = true;
}

void Optimizer::collect_seeds(const Network& net, const OutputModel& model,
                              const ForwardTrace& trace, const std::vector<Matrix>& loss_deltas,
                              double scale, Rng& rng, Vector& diag, Vector& row) const {
  const auto batch = static_cast<Eigen::Index>(trace.batch());
  const bool qd = metric_->mode() == MetricMode::quasi_diagonal;
  std::span<double> row_span = qd ? as_span(row) : std::span<double>{};
  const Matrix& a = trace.output();
  switch (cfg_.algo) {
    case Algo::adagrad:
    case Algo::dop:
    case Algo::qdop:
      net.accumulate_moments(trace, loss_deltas, Vector::Constant(batch, scale), as_span(diag), row_span);
      break;
    case Algo::dmcnat:
    case Algo::qdmcnat: {
      const Vector w = Vector::Constant(batch, scale / cfg_.n_mc);
      for (int r = 0; r < cfg_.n_mc; ++r) {
        const Targets pseudo = model.sample_pseudo_targets(a, rng);
        const auto deltas = net.backprop_deltas(trace, model.loss_output_grad(a, pseudo));
        net.accumulate_moments(trace, deltas, w, as_span(diag), row_span);
      }
      break;
    }
    case Algo::dnat:
    case Algo::qdnat:
      for (std::size_t k = 0; k < model.dim(); ++k) {
        const FisherBatchTerm term = model.fisher_term(a, k);
        const auto deltas = net.backprop_deltas(trace, term.seeds);
        net.accumulate_moments(trace, deltas, scale * term.weights, as_span(diag), row_span);
      }
      break;
    case Algo::sgd:
      break;
  }
}

StepReport Optimizer::step(Network& net, OutputModel& model, const Matrix& x, const Targets& t,
                           Rng& rng) {
  const auto batch = x.cols();
  if (batch == 0) throw StructuralError("step: empty minibatch");
  if (metric_ && !(metric_->layout() == net.layout())) {
    throw StructuralError("step: optimizer layout does not match the network");
  }
  const ForwardTrace trace = net.forward(x, Mode::train, &rng);
  const Vector losses = model.loss(trace.output(), t);
  StepReport report;
  report.batch = static_cast<std::size_t>(batch);
  report.mean_loss = losses.mean();
  if (!std::isfinite(report.mean_loss)) {
    throw DivergenceError("non-finite loss", cfg_.eta);
  }
  const Matrix out_grad = model.loss_output_grad(trace.output(), t);
  const auto deltas = net.backprop_deltas(trace, out_grad);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  net.accumulate_gradient(trace, deltas, Vector::Constant(batch, inv_batch), as_span(grad));
  report.grad_norm = grad.norm();

  Vector direction;
  if (!metric_) {
    direction = grad;
  } else {
    if (!frozen_) {
      const double gamma = metric_->initialized() ? cfg_.gamma : 1.0;
      const auto n = static_cast<Eigen::Index>(net.num_params());
      Vector diag = Vector::Zero(n);
      Vector row = metric_->mode() == MetricMode::quasi_diagonal ? Vector::Zero(n) : Vector();
      collect_seeds(net, model, trace, deltas, inv_batch, rng, diag, row);
      metric_->decay(gamma);
      metric_->accumulate(as_span(diag), as_span(row), gamma);
      metric_->set_initialized(true);
    }
    if (cfg_.algo == Algo::adagrad) {
      direction = grad;
      const auto d = metric_->diag();
      for (Eigen::Index i = 0; i < direction.size(); ++i) {
        direction[i] /= std::sqrt(d[static_cast<std::size_t>(i)] + cfg_.epsilon);
      }
    } else {
      try {
        direction = metric_->solve(as_span(grad), cfg_.epsilon);
      } catch (const NumericError& e) {
        throw DivergenceError(std::string("metric solve failed: ") + e.what(), cfg_.eta);
      }
    }
  }
  report.direction_norm = direction.norm();
  if (!std::isfinite(report.direction_norm)) {
    throw DivergenceError("non-finite update direction", cfg_.eta);
  }
  Vector next = net.params() - cfg_.eta * direction;
  if (!next.allFinite()) throw DivergenceError("non-finite parameters", cfg_.eta);

  Vector sigma_grad;
  if (model.learned_variance()) sigma_grad = model.log_sigma_grad(trace.output(), t);
  net.mutable_params() = std::move(next);
  if (model.learned_variance()) model.step_log_sigma(sigma_grad, cfg_.eta);
  return report;
}

void Optimizer::warmup(const Network& net, const OutputModel& model, const Matrix& x,
                       const Targets& t, Rng& rng) {
  if (!metric_) return;
  if (x.cols() == 0) throw StructuralError("warmup: empty sample set");
  if (!(metric_->layout() == net.layout())) {
    throw StructuralError("warmup: optimizer layout does not match the network");
  }
  const auto n = static_cast<Eigen::Index>(net.num_params());
  Vector diag = Vector::Zero(n);
  Vector row = metric_->mode() == MetricMode::quasi_diagonal ? Vector::Zero(n) : Vector();
  const double scale = 1.0 / static_cast<double>(x.cols());
  constexpr Eigen::Index kChunk = 1000;
  for (Eigen::Index start = 0; start < x.cols(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, x.cols() - start);
    const Matrix xc = x.middleCols(start, len);
    Targets tc;
    if (!t.labels.empty()) {
      tc.labels.assign(t.labels.begin() + start, t.labels.begin() + start + len);
    } else {
      tc.values = t.values.middleCols(start, len);
    }
    const ForwardTrace trace = net.forward(xc, Mode::train, &rng);
    const auto deltas = net.backprop_deltas(trace, model.loss_output_grad(trace.output(), tc));
    collect_seeds(net, model, trace, deltas, scale, rng, diag, row);
  }
  metric_->decay(1.0);
  metric_->accumulate(as_span(diag), as_span(row), 1.0);
  metric_->set_initialized(true);
}

}  // namespace qdnn
