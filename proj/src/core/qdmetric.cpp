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

#include "core/qdmetric.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "core/error.hpp"

namespace qdnn {

BlockLayout::BlockLayout(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  std::size_t total = 0;
  for (const Block& b : blocks_) {
    if (b.length == 0) throw StructuralError("BlockLayout: empty block");
    total += b.length;
  }
  std::vector<char> seen(total, 0);
  for (const Block& b : blocks_) {
    if (b.offset + b.length > total) {
      throw StructuralError("BlockLayout: block exceeds parameter range");
    }
    for (std::size_t i = b.offset; i < b.offset + b.length; ++i) {
      if (seen[i]) throw StructuralError("BlockLayout: overlapping blocks");
      seen[i] = 1;
    }
  }
  size_ = total;
}

BlockLayout BlockLayout::from_lengths(std::span<const std::size_t> lengths) {
  BlockLayout layout;
  for (std::size_t n : lengths) layout.append(n);
  return layout;
}

void BlockLayout::append(std::size_t length) {
  if (length == 0) throw StructuralError("BlockLayout: empty block");
  blocks_.push_back({size_, length});
  size_ += length;
}

void MetricConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("metric update rate gamma must lie in (0,1]");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("regularization epsilon must be finite and >= 0");
  }
}

QDMetric::QDMetric(BlockLayout layout, MetricMode mode)
    : layout_(std::move(layout)),
      diag_(Vector::Zero(static_cast<Eigen::Index>(layout_.size()))),
      row_(Vector::Zero(static_cast<Eigen::Index>(layout_.size()))),
      mode_(mode) {}

QDMetric QDMetric::identity(BlockLayout layout, MetricMode mode) {
  QDMetric m(std::move(layout), mode);
  m.diag_.setOnes();
  m.initialized_ = true;
  return m;
}

void QDMetric::check_dim(std::size_t n, const char* what) const {
  if (n != layout_.size()) {
    std::ostringstream os;
    os << what << ": vector of size " << n << " does not match metric dimension "
       << layout_.size();
    throw StructuralError(os.str());
  }
}

void QDMetric::rank_one_update(std::span<const double> v, double alpha) {
  check_dim(v.size(), "rank_one_update");
  if (!std::isfinite(alpha)) throw NumericError("rank_one_update: alpha is not finite");
  for (const Block& b : layout_.blocks()) {
    const double* w = v.data() + b.offset;
    double* d = diag_.data() + b.offset;
    for (std::size_t i = 0; i < b.length; ++i) d[i] += alpha * w[i] * w[i];
    if (mode_ == MetricMode::quasi_diagonal) {
      double* r = row_.data() + b.offset;
      const double aw0 = alpha * w[0];
      for (std::size_t i = 1; i < b.length; ++i) r[i] += aw0 * w[i];
    }
  }
}

void QDMetric::accumulate(std::span<const double> diag_terms,
                          std::span<const double> row_terms, double alpha) {
  check_dim(diag_terms.size(), "accumulate(diag)");
  if (mode_ == MetricMode::quasi_diagonal) check_dim(row_terms.size(), "accumulate(row)");
  for (std::size_t i = 0; i < diag_terms.size(); ++i) {
    diag_[static_cast<Eigen::Index>(i)] += alpha * diag_terms[i];
  }
  if (mode_ != MetricMode::quasi_diagonal) return;
  for (const Block& b : layout_.blocks()) {
    double* r = row_.data() + b.offset;
    const double* s = row_terms.data() + b.offset;
    for (std::size_t i = 1; i < b.length; ++i) r[i] += alpha * s[i];
  }
}

void QDMetric::decay(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("decay: gamma must lie in [0,1]");
  }
  if (gamma == 0.0) return;
  const double keep = 1.0 - gamma;
  diag_ *= keep;
  if (mode_ == MetricMode::quasi_diagonal) {
    for (const Block& b : layout_.blocks()) {
      double* r = row_.data() + b.offset;
      for (std::size_t i = 1; i < b.length; ++i) r[i] *= keep;
    }
  }
}

Vector QDMetric::solve(std::span<const double> v, double epsilon) const {
  Vector out(static_cast<Eigen::Index>(v.size()));
  solve_into(v, epsilon, as_span(out));
  return out;
}

void QDMetric::solve_into(std::span<const double> v, double epsilon,
                          std::span<double> out) const {
  check_dim(v.size(), "solve");
  check_dim(out.size(), "solve(out)");
  if (mode_ == MetricMode::diagonal) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = diag_[static_cast<Eigen::Index>(i)] + epsilon;
      if (d == 0.0) throw NumericError("solve: zero diagonal entry with epsilon = 0");
      out[i] = v[i] / d;
    }
    return;
  }
  for (const Block& b : layout_.blocks()) {
    const double* w = v.data() + b.offset;
    const double* d = diag_.data() + b.offset;
    const double* r = row_.data() + b.offset;
    double* x = out.data() + b.offset;
    const double d0 = d[0] + epsilon;
    if (d0 == 0.0) {
      throw NumericError("solve: zero bias curvature with epsilon = 0 (metric not initialized?)");
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < b.length; ++i) {
      const double den = std::max((d[i] + epsilon) * d0 - r[i] * r[i], epsilon);
      if (den == 0.0) throw NumericError("solve: singular bias/weight pair with epsilon = 0");
      x[i] = (d0 * w[i] - r[i] * w[0]) / den;
      acc += r[i] * x[i];
    }
    x[0] = (w[0] - acc) / d0;
  }
}

void QDMetric::write_csv(std::ostream& os) const {
  const auto old_prec = os.precision(17);
  for (const Block& b : layout_.blocks()) {
    for (std::size_t i = 0; i < b.length; ++i) {
      if (i) os << ',';
      os << diag_[static_cast<Eigen::Index>(b.offset + i)];
    }
    for (std::size_t i = 1; i < b.length; ++i) {
      os << ',' << row_[static_cast<Eigen::Index>(b.offset + i)];
    }
    os << '\n';
  }
  os.precision(old_prec);
}

QDMetric qd_reduce(const Matrix& a, const BlockLayout& layout, MetricMode mode) {
  const auto n = static_cast<Eigen::Index>(layout.size());
  if (a.rows() != n || a.cols() != n) {
    throw StructuralError("qd_reduce: matrix dimension does not match layout");
  }
  QDMetric m(layout, mode);
  auto diag = m.mutable_diag();
  auto row = m.mutable_row();
  for (Eigen::Index i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = a(i, i);
  if (mode == MetricMode::quasi_diagonal) {
    for (const Block& b : layout.blocks()) {
      const auto o = static_cast<Eigen::Index>(b.offset);
      for (std::size_t i = 1; i < b.length; ++i) {
        row[b.offset + i] = a(o, o + static_cast<Eigen::Index>(i));
      }
    }
  }
  return m;
}

}  // namespace qdnn
