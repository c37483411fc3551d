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

#ifndef QDNN_CORE_OUTPUTS_HPP
#define QDNN_CORE_OUTPUTS_HPP

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "core/qdmetric.hpp"
#include "core/random.hpp"

namespace qdnn {

enum class OutputKind { categorical, gaussian, bernoulli };

// Standard deviations of a learned-variance gaussian head never go below the
// quantization step of 8-bit data.
inline constexpr double kSigmaFloor = 1.0 / 256.0;
// Bernoulli means are clamped to [delta, 1 - delta].
inline constexpr double kBernoulliClamp = 1e-7;

// Targets for a batch: class indices for a categorical head, one column of
// real values per sample otherwise.
struct Targets {
  std::vector<int> labels;
  Matrix values;

  std::size_t size() const {
    return labels.empty() ? static_cast<std::size_t>(values.cols()) : labels.size();
  }
};

// One weighted rank-one contribution to the exact Fisher metric of a sample:
// weight * (J^T seed)(J^T seed)^T, J the Jacobian of the network output.
struct FisherTerm {
  Vector seed;
  double weight = 0.0;
};

// Term k of the exact Fisher decomposition for a whole batch: seeds has one
// column per sample, weights one entry per sample.
struct FisherBatchTerm {
  Matrix seeds;
  Vector weights;
};

// Probabilistic interpretation of the network output a (the last layer's
// pre-activation). Categorical: p = softmax(a). Gaussian: mean y = a.
// Bernoulli: y = sigmoid(a). All gradients and seeds are taken with respect
// to a.
class OutputModel {
 public:
  OutputModel() = default;

  static OutputModel categorical(std::size_t classes);
  static OutputModel gaussian(std::size_t dim, double sigma = 1.0);
  static OutputModel gaussian_learned(std::size_t dim, double initial_sigma = 1.0);
  static OutputModel bernoulli(std::size_t dim);
  // "categorical", "gaussian", "gaussian-learned" or "bernoulli".
  static OutputModel parse(std::string_view name, std::size_t dim);

  OutputKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  bool learned_variance() const { return learned_; }
  std::string_view name() const;

  Vector sigma() const { return log_sigma_.array().exp(); }
  const Vector& log_sigma() const { return log_sigma_; }
  // Sets log sigma and re-applies the floor.
  void set_log_sigma(const Vector& s);

  // Class probabilities, gaussian means or bernoulli means (clamped).
  Matrix mean(const Matrix& a) const;

  // Per-sample negative log-likelihood.
  Vector loss(const Matrix& a, const Targets& t) const;
  double loss(const Vector& a, const Targets& t) const;

  // d loss / d a, one column per sample.
  Matrix loss_output_grad(const Matrix& a, const Targets& t) const;

  // t~ ~ p(. | a) for every sample.
  Targets sample_pseudo_targets(const Matrix& a, Rng& rng) const;

  // Exact decomposition into dim() weighted seeds.
  std::vector<FisherTerm> enumerate_fisher_terms(const Vector& a) const;
  FisherBatchTerm fisher_term(const Matrix& a, std::size_t k) const;

  // Mean over the batch of d loss / d log sigma (learned variance only).
  Vector log_sigma_grad(const Matrix& a, const Targets& t) const;
  // log sigma <- log sigma - eta * grad, then floor.
  void step_log_sigma(const Vector& grad, double eta);

  // Misclassified samples for a categorical head; summed squared error of the
  // means otherwise.
  double error_sum(const Matrix& a, const Targets& t) const;

 private:
  void check(const Matrix& a, const Targets& t) const;
  void project_variance();

  OutputKind kind_ = OutputKind::categorical;
  std::size_t dim_ = 0;
  bool learned_ = false;
  Vector log_sigma_;
};

}  // namespace qdnn

#endif  // QDNN_CORE_OUTPUTS_HPP
