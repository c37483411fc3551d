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

#ifndef QDNN_CORE_QDMETRIC_HPP
#define QDNN_CORE_QDMETRIC_HPP

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace qdnn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> as_span(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// One block of the parameter vector: the bias (entry 0) followed by the
// incoming weights of a single unit.
struct Block {
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Block&) const = default;
};

// Partition of the flat parameter vector into blocks. Blocks are disjoint,
// non-empty and cover every index exactly once.
class BlockLayout {
 public:
  BlockLayout() = default;
  // Validates the partition; throws StructuralError otherwise.
  explicit BlockLayout(std::vector<Block> blocks);

  // Contiguous blocks of the given lengths, in order.
  static BlockLayout from_lengths(std::span<const std::size_t> lengths);

  // Appends a block right after the current end.
  void append(std::size_t length);

  std::size_t size() const { return size_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  const Block& block(std::size_t k) const { return blocks_[k]; }
  const std::vector<Block>& blocks() const { return blocks_; }

  bool operator==(const BlockLayout&) const = default;

 private:
  std::vector<Block> blocks_;
  std::size_t size_ = 0;
};

enum class MetricMode { diagonal, quasi_diagonal };

struct MetricConfig {
  double gamma = 0.01;
  double epsilon = 1e-8;

  // gamma in (0,1], epsilon >= 0.
  void validate() const;
};

// Quasi-diagonal metric: per block, the diagonal and the first row (pairing
// each weight with the block's bias). Row entry 0 of every block duplicates
// the diagonal and is never read or written. In diagonal mode the row stays
// identically zero.
class QDMetric {
 public:
  QDMetric() = default;
  QDMetric(BlockLayout layout, MetricMode mode);

  static QDMetric identity(BlockLayout layout, MetricMode mode);

  const BlockLayout& layout() const { return layout_; }
  MetricMode mode() const { return mode_; }
  std::size_t dim() const { return layout_.size(); }

  std::span<const double> diag() const { return as_span(diag_); }
  std::span<const double> row() const { return as_span(row_); }
  // Raw access for tests and tooling; callers keep diag nonnegative.
  std::span<double> mutable_diag() { return as_span(diag_); }
  std::span<double> mutable_row() { return as_span(row_); }

  bool initialized() const { return initialized_; }
  void set_initialized(bool v) { initialized_ = v; }

  // M <- M + alpha * QD(v v^T).
  void rank_one_update(std::span<const double> v, double alpha);

  // M <- M + alpha * QD(S), where S is given by its diagonal and, per block,
  // its first row. Used to fold a whole minibatch of rank-one terms at once.
  void accumulate(std::span<const double> diag_terms,
                  std::span<const double> row_terms, double alpha);

  // M <- (1 - gamma) M.
  void decay(double gamma);

  // QD(M)^{-1} v with diagonal shift and determinant floor epsilon.
  Vector solve(std::span<const double> v, double epsilon) const;
  void solve_into(std::span<const double> v, double epsilon,
                  std::span<double> out) const;

  // Reals held by the metric (diag + row).
  std::size_t stored_reals() const {
    return static_cast<std::size_t>(diag_.size() + row_.size());
  }

  // One line per block: the n_k diagonal entries, then row entries 1..n_k-1.
  void write_csv(std::ostream& os) const;

 private:
  void check_dim(std::size_t n, const char* what) const;

  BlockLayout layout_;
  Vector diag_;
  Vector row_;
  MetricMode mode_ = MetricMode::quasi_diagonal;
  bool initialized_ = false;
};

// QD(A) of a dense symmetric matrix. Test and tooling helper; the trainer
// never builds dense metrics.
QDMetric qd_reduce(const Matrix& a, const BlockLayout& layout,
                   MetricMode mode = MetricMode::quasi_diagonal);

}  // namespace qdnn

#endif  // QDNN_CORE_QDMETRIC_HPP
