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

#ifndef QDNN_CORE_DATA_HPP
#define QDNN_CORE_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "core/outputs.hpp"
#include "core/qdmetric.hpp"
#include "core/random.hpp"

namespace qdnn {

// Samples are stored column-wise: features is D x N. Classification sets
// carry `labels`; regression and autoencoding sets carry `targets` (K x N).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  Matrix targets;
  std::size_t num_classes = 0;

  std::size_t size() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.rows()); }
  bool has_labels() const { return !labels.empty(); }
  std::size_t target_dim() const {
    return has_labels() ? num_classes : static_cast<std::size_t>(targets.rows());
  }

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset head(std::size_t n) const;
  Matrix batch_features(std::span<const std::size_t> indices) const;
  Targets batch_targets(std::span<const std::size_t> indices) const;
  Targets all_targets() const;

  // Reconstruction task: targets become a copy of the features.
  void make_autoencoder();
};

// MNIST-style IDX pair (images 0x00000803, labels 0x00000801, big-endian).
// Files ending in .gz are inflated transparently. Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Looks for train-images-idx3-ubyte[.gz] and train-labels-idx1-ubyte[.gz].
Dataset load_mnist_dir(const std::filesystem::path& dir);

struct CsvOptions {
  // Trailing columns used as regression targets; 0 means autoencoding.
  std::size_t target_columns = 0;
  bool header = false;
};

// Rectangular numeric CSV. Feature columns are min-max normalized to [0,1]
// (constant columns map to 0).
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts);

// Per-row min-max normalization of a D x N matrix to [0,1].
void normalize_minmax(Matrix& features);

// RGB pixels (3 x P interleaved rows r,g,b per pixel) to luma.
Matrix to_grayscale(const Matrix& rgb);

struct SyntheticEegOptions {
  std::size_t samples = 12000;
  std::size_t channels = 56;
  std::size_t sources = 8;
  double noise = 0.1;
  std::uint64_t seed = 1;
};

// Multichannel signal: each channel is a random mixture of a few shared
// sinusoidal sources plus white noise, min-max normalized per channel.
// Targets are the inputs (autoencoding).
Dataset make_synthetic_eeg(const SyntheticEegOptions& opts);

struct TransformSpec {
  bool invert = false;
  // Optional per-feature a * v + b; empty means identity.
  Vector scale;
  Vector shift;
};

Dataset apply_transform(const Dataset& ds, const TransformSpec& spec);

struct Split {
  Dataset train;
  Dataset valid;
};

// The last `valid_count` samples form the validation set.
Split split_tail(const Dataset& ds, std::size_t valid_count);

// One epoch: a seeded shuffle of 0..n-1 cut into batches of `batch_size`;
// the last batch may be short.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, Rng& rng);

}  // namespace qdnn

#endif  // QDNN_CORE_DATA_HPP
