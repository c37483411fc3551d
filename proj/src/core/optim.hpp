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

#ifndef QDNN_CORE_OPTIM_HPP
#define QDNN_CORE_OPTIM_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "core/network.hpp"
#include "core/outputs.hpp"
#include "core/qdmetric.hpp"
#include "core/random.hpp"

namespace qdnn {

// sgd and adagrad, then {diagonal, quasi-diagonal} x {outer product,
// Monte Carlo natural, exact natural}.
enum class Algo { sgd, adagrad, dop, qdop, dmcnat, qdmcnat, dnat, qdnat };

Algo parse_algo(std::string_view name);
std::string_view to_string(Algo a);
bool uses_metric(Algo a);
MetricMode metric_mode(Algo a);

struct OptimizerConfig {
  Algo algo = Algo::qdop;
  double eta = 0.01;
  double gamma = 0.01;
  double epsilon = 1e-8;
  int n_mc = 1;

  void validate() const;
};

struct StepReport {
  double mean_loss = 0.0;
  double grad_norm = 0.0;
  double direction_norm = 0.0;
  std::size_t batch = 0;
};

// theta <- theta - eta * grad.
void step_sgd(std::span<double> params, std::span<const double> grad_mean, double eta);

// theta <- theta - eta * (diag + epsilon)^{-1/2} grad, with `accumulator` a
// diagonal metric already holding the moving average of squared gradients.
void step_adagrad(std::span<double> params, std::span<const double> grad_mean,
                  const QDMetric& accumulator, double eta, double epsilon);

// Owns the curvature state of one training run and applies minibatch steps.
//
// Riemannian variants, per minibatch: forward, loss gradient v for the true
// targets, metric seeds (v itself for OP, pseudo-target gradients for MCNat,
// the exact Fisher terms for Nat), M <- (1 - gamma) M + gamma M_minibatch with
// M_minibatch the mean of the per-sample rank-one terms, then
// theta <- theta - eta QD(M)^{-1} grad_mean. The first minibatch uses
// gamma = 1 unless warmup() ran. AdaGrad keeps the same moving average as
// DOP and takes its square root.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, const BlockLayout& layout);

  const OptimizerConfig& config() const { return cfg_; }
  bool has_metric() const { return metric_.has_value(); }
  const QDMetric& metric() const;
  bool initialized() const { return metric_ && metric_->initialized(); }

  // Throws DivergenceError, leaving params untouched, when the loss or the
  // update is not finite.
  StepReport step(Network& net, OutputModel& model, const Matrix& x, const Targets& t, Rng& rng);

  // Sets the metric to the mean of the seeds over the given samples.
  void warmup(const Network& net, const OutputModel& model, const Matrix& x, const Targets& t,
              Rng& rng);

  // Replaces the metric by a fixed one that steps never update.
  void freeze_metric(QDMetric m);

 private:
  // Adds to diag/row the per-sample metric seeds of the batch, each weighted
  // by `scale`.
  void collect_seeds(const Network& net, const OutputModel& model, const ForwardTrace& trace,
                     const std::vector<Matrix>& loss_deltas, double scale, Rng& rng,
                     Vector& diag, Vector& row) const;

  OptimizerConfig cfg_;
  std::optional<QDMetric> metric_;
  bool frozen_ = false;
};

}  // namespace qdnn

#endif  // QDNN_CORE_OPTIM_HPP
