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

#include "core/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "core/error.hpp"

namespace qdnn {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

Vector softmax(const Eigen::Ref<const Vector>& a) {
  const double m = a.maxCoeff();
  Vector e = (a.array() - m).exp();
  return e / e.sum();
}

double log_sum_exp(const Eigen::Ref<const Vector>& a) {
  const double m = a.maxCoeff();
  return m + std::log((a.array() - m).exp().sum());
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_mean(double y) { return std::clamp(y, kBernoulliClamp, 1.0 - kBernoulliClamp); }

}  // namespace

OutputModel OutputModel::categorical(std::size_t classes) {
  if (classes < 1) throw ConfigError("categorical head needs at least one class");
  OutputModel m;
  m.kind_ = OutputKind::categorical;
  m.dim_ = classes;
  return m;
}

OutputModel OutputModel::gaussian(std::size_t dim, double sigma) {
  if (dim < 1) throw ConfigError("gaussian head needs at least one output");
  if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
  OutputModel m;
  m.kind_ = OutputKind::gaussian;
  m.dim_ = dim;
  m.log_sigma_ = Vector::Constant(idx(dim), std::log(sigma));
  return m;
}

OutputModel OutputModel::gaussian_learned(std::size_t dim, double initial_sigma) {
  OutputModel m = gaussian(dim, initial_sigma);
  m.learned_ = true;
  m.project_variance();
  return m;
}

OutputModel OutputModel::bernoulli(std::size_t dim) {
  if (dim < 1) throw ConfigError("bernoulli head needs at least one output");
  OutputModel m;
  m.kind_ = OutputKind::bernoulli;
  m.dim_ = dim;
  return m;
}

OutputModel OutputModel::parse(std::string_view name, std::size_t dim) {
  if (name == "categorical") return categorical(dim);
  if (name == "gaussian") return gaussian(dim);
  if (name == "gaussian-learned") return gaussian_learned(dim);
  if (name == "bernoulli") return bernoulli(dim);
  throw ConfigError("unknown output model '" + std::string(name) + "'");
}

std::string_view OutputModel::name() const {
  switch (kind_) {
    case OutputKind::categorical: return "categorical";
    case OutputKind::gaussian: return learned_ ? "gaussian-learned" : "gaussian";
    case OutputKind::bernoulli: return "bernoulli";
  }
  return "?";
}

void OutputModel::set_log_sigma(const Vector& s) {
  if (kind_ != OutputKind::gaussian || s.size() != idx(dim_)) {
    throw StructuralError("set_log_sigma: gaussian head of matching size required");
  }
  log_sigma_ = s;
  if (learned_) project_variance();
}

void OutputModel::project_variance() {
  const double floor = std::log(kSigmaFloor);
  log_sigma_ = log_sigma_.cwiseMax(floor);
}

void OutputModel::check(const Matrix& a, const Targets& t) const {
  if (a.rows() != idx(dim_)) throw StructuralError("output model: output dimension mismatch");
  if (kind_ == OutputKind::categorical) {
    if (t.labels.size() != static_cast<std::size_t>(a.cols())) {
      throw StructuralError("output model: one class label per sample expected");
    }
    for (int c : t.labels) {
      if (c < 0 || static_cast<std::size_t>(c) >= dim_) {
        std::ostringstream os;
        os << "output model: class index " << c << " out of range [0," << dim_ << ")";
        throw StructuralError(os.str());
      }
    }
  } else if (t.values.rows() != a.rows() || t.values.cols() != a.cols()) {
    throw StructuralError("output model: target shape mismatch");
  }
}

Matrix OutputModel::mean(const Matrix& a) const {
  switch (kind_) {
    case OutputKind::categorical: {
      Matrix p(a.rows(), a.cols());
      for (Eigen::Index s = 0; s < a.cols(); ++s) p.col(s) = softmax(a.col(s));
      return p;
    }
    case OutputKind::gaussian:
      return a;
    case OutputKind::bernoulli:
      return a.unaryExpr([](double z) { return clamp_mean(logistic(z)); });
  }
  return a;
}

Vector OutputModel::loss(const Matrix& a, const Targets& t) const {
  check(a, t);
  Vector out(a.cols());
  switch (kind_) {
    case OutputKind::categorical:
      for (Eigen::Index s = 0; s < a.cols(); ++s) {
        out[s] = log_sum_exp(a.col(s)) - a(t.labels[static_cast<std::size_t>(s)], s);
      }
      break;
    case OutputKind::gaussian: {
      const Vector inv_var = (-2.0 * log_sigma_).array().exp();
      const double log_norm =
          0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) + log_sigma_.sum();
      for (Eigen::Index s = 0; s < a.cols(); ++s) {
        out[s] = 0.5 * ((a.col(s) - t.values.col(s)).array().square() * inv_var.array()).sum() + log_norm;
      }
      break;
    }
    case OutputKind::bernoulli: {
      const Matrix y = mean(a);
      for (Eigen::Index s = 0; s < a.cols(); ++s) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < a.rows(); ++k) {
          const double tk = t.values(k, s);
          acc -= tk * std::log(y(k, s)) + (1.0 - tk) * std::log(1.0 - y(k, s));
        }
        out[s] = acc;
      }
      break;
    }
  }
  return out;
}

double OutputModel::loss(const Vector& a, const Targets& t) const {
  return loss(Matrix(a), t)[0];
}

Matrix OutputModel::loss_output_grad(const Matrix& a, const Targets& t) const {
  check(a, t);
  switch (kind_) {
    case OutputKind::categorical: {
      Matrix g = mean(a);
      for (Eigen::Index s = 0; s < a.cols(); ++s) g(t.labels[static_cast<std::size_t>(s)], s) -= 1.0;
      return g;
    }
    case OutputKind::gaussian: {
      const Vector inv_var = (-2.0 * log_sigma_).array().exp();
      return inv_var.asDiagonal() * (a - t.values);
    }
    case OutputKind::bernoulli:
      return a.unaryExpr([](double z) { return logistic(z); }) - t.values;
  }
  return a;
}

Targets OutputModel::sample_pseudo_targets(const Matrix& a, Rng& rng) const {
  if (a.rows() != idx(dim_)) throw StructuralError("output model: output dimension mismatch");
  Targets t;
  switch (kind_) {
    case OutputKind::categorical: {
      const Matrix p = mean(a);
      t.labels.resize(static_cast<std::size_t>(a.cols()));
      for (Eigen::Index s = 0; s < a.cols(); ++s) {
        const double u = uniform01(rng);
        double acc = 0.0;
        int c = static_cast<int>(dim_) - 1;
        for (Eigen::Index k = 0; k < p.rows(); ++k) {
          acc += p(k, s);
          if (u < acc) {
            c = static_cast<int>(k);
            break;
          }
        }
        t.labels[static_cast<std::size_t>(s)] = c;
      }
      break;
    }
    case OutputKind::gaussian: {
      const Vector sigma = this->sigma();
      t.values.resize(a.rows(), a.cols());
      for (Eigen::Index s = 0; s < a.cols(); ++s) {
        for (Eigen::Index k = 0; k < a.rows(); ++k) t.values(k, s) = a(k, s) + sigma[k] * standard_normal(rng);
      }
      break;
    }
    case OutputKind::bernoulli: {
      const Matrix y = mean(a);
      t.values.resize(a.rows(), a.cols());
      for (Eigen::Index s = 0; s < a.cols(); ++s) {
        for (Eigen::Index k = 0; k < a.rows(); ++k) t.values(k, s) = uniform01(rng) < y(k, s) ? 1.0 : 0.0;
      }
      break;
    }
  }
  return t;
}

FisherBatchTerm OutputModel::fisher_term(const Matrix& a, std::size_t k) const {
  if (a.rows() != idx(dim_)) throw StructuralError("output model: output dimension mismatch");
  if (k >= dim_) throw StructuralError("fisher_term: term index out of range");
  const auto kk = idx(k);
  FisherBatchTerm term;
  switch (kind_) {
    case OutputKind::categorical: {
      // seed = d loss(k) / d a = p - e_k, weight p_k
      term.seeds = mean(a);
      term.weights = term.seeds.row(kk).transpose();
      term.seeds.row(kk).array() -= 1.0;
      break;
    }
    case OutputKind::gaussian:
      term.seeds = Matrix::Zero(a.rows(), a.cols());
      term.seeds.row(kk).setOnes();
      term.weights = Vector::Constant(a.cols(), std::exp(-2.0 * log_sigma_[kk]));
      break;
    case OutputKind::bernoulli: {
      // seed = d y_k / d a = y_k (1 - y_k) e_k, weight 1 / (y_k (1 - y_k))
      const Matrix y = mean(a);
      term.seeds = Matrix::Zero(a.rows(), a.cols());
      term.weights.resize(a.cols());
      for (Eigen::Index s = 0; s < a.cols(); ++s) {
        const double v = y(kk, s) * (1.0 - y(kk, s));
        term.seeds(kk, s) = v;
        term.weights[s] = 1.0 / v;
      }
      break;
    }
  }
  return term;
}

std::vector<FisherTerm> OutputModel::enumerate_fisher_terms(const Vector& a) const {
  std::vector<FisherTerm> out;
  out.reserve(dim_);
  const Matrix am = a;
  for (std::size_t k = 0; k < dim_; ++k) {
    FisherBatchTerm t = fisher_term(am, k);
    out.push_back({t.seeds.col(0), t.weights[0]});
  }
  return out;
}

Vector OutputModel::log_sigma_grad(const Matrix& a, const Targets& t) const {
  check(a, t);
  if (!learned_) throw StructuralError("log_sigma_grad: head has no learned variance");
  const Vector inv_var = (-2.0 * log_sigma_).array().exp();
  // d/ds [ r^2 e^{-2s} / 2 + s ] = 1 - r^2 e^{-2s}
  const Vector mean_sq = (a - t.values).array().square().rowwise().mean();
  return Vector::Ones(idx(dim_)) - mean_sq.cwiseProduct(inv_var);
}

void OutputModel::step_log_sigma(const Vector& grad, double eta) {
  if (!learned_) return;
  log_sigma_ -= eta * grad;
  project_variance();
}

double OutputModel::error_sum(const Matrix& a, const Targets& t) const {
  check(a, t);
  if (kind_ == OutputKind::categorical) {
    double wrong = 0.0;
    for (Eigen::Index s = 0; s < a.cols(); ++s) {
      Eigen::Index best = 0;
      a.col(s).maxCoeff(&best);
      if (best != t.labels[static_cast<std::size_t>(s)]) wrong += 1.0;
    }
    return wrong;
  }
  return (mean(a) - t.values).squaredNorm();
}

}  // namespace qdnn
