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

#include "core/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "core/error.hpp"

namespace qdnn {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

// gzread passes uncompressed files through unchanged.
std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::vector<unsigned char> out;
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path.string());
  unsigned char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + n);
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw IoError("corrupt gzip stream in " + path.string());
  return out;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

std::filesystem::path find_variant(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    auto p = dir / (stem + suffix);
    if (std::filesystem::exists(p)) return p;
  }
  throw IoError("no " + stem + "[.gz] in " + dir.string());
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.features = batch_features(indices);
  if (has_labels()) {
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.labels.push_back(labels[i]);
  } else if (targets.size() > 0) {
    out.targets.resize(targets.rows(), idx(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c) out.targets.col(idx(c)) = targets.col(idx(indices[c]));
  }
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return subset(ids);
}

Matrix Dataset::batch_features(std::span<const std::size_t> indices) const {
  Matrix x(features.rows(), idx(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    if (indices[c] >= size()) throw StructuralError("dataset index out of range");
    x.col(idx(c)) = features.col(idx(indices[c]));
  }
  return x;
}

Targets Dataset::batch_targets(std::span<const std::size_t> indices) const {
  Targets t;
  if (has_labels()) {
    t.labels.reserve(indices.size());
    for (std::size_t i : indices) t.labels.push_back(labels[i]);
  } else {
    t.values.resize(targets.rows(), idx(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c) t.values.col(idx(c)) = targets.col(idx(indices[c]));
  }
  return t;
}

Targets Dataset::all_targets() const {
  Targets t;
  if (has_labels()) {
    t.labels = labels;
  } else {
    t.values = targets;
  }
  return t;
}

void Dataset::make_autoencoder() {
  labels.clear();
  num_classes = 0;
  targets = features;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);
  if (img.size() < 16 || be32(img, 0) != 0x00000803u) {
    throw IoError(images.string() + ": not an IDX image file (bad magic)");
  }
  if (lab.size() < 8 || be32(lab, 0) != 0x00000801u) {
    throw IoError(labels.string() + ": not an IDX label file (bad magic)");
  }
  const std::size_t n = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t d = rows * cols;
  if (img.size() < 16 + n * d) throw IoError(images.string() + ": truncated image data");
  const std::size_t nl = be32(lab, 4);
  if (lab.size() < 8 + nl) throw IoError(labels.string() + ": truncated label data");
  if (nl != n) {
    std::ostringstream os;
    os << "IDX count mismatch: " << n << " images, " << nl << " labels";
    throw IoError(os.str());
  }
  Dataset ds;
  ds.features.resize(idx(d), idx(n));
  const unsigned char* px = img.data() + 16;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < d; ++i) ds.features(idx(i), idx(s)) = px[s * d + i] / 255.0;
  }
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t s = 0; s < n; ++s) {
    ds.labels[s] = lab[8 + s];
    max_label = std::max(max_label, ds.labels[s]);
  }
  ds.num_classes = n == 0 ? 0 : std::max<std::size_t>(10, static_cast<std::size_t>(max_label) + 1);
  return ds;
}

Dataset load_mnist_dir(const std::filesystem::path& dir) {
  return load_idx(find_variant(dir, "train-images-idx3-ubyte"),
                  find_variant(dir, "train-labels-idx1-ubyte"));
}

void normalize_minmax(Matrix& features) {
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    auto row = features.row(r);
    if (row.size() == 0) continue;
    const double lo = row.minCoeff();
    const double range = row.maxCoeff() - lo;
    if (range > 0.0) {
      row = (row.array() - lo) / range;
    } else {
      row.setZero();
    }
  }
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (opts.header && rows.empty() && width == 0) {
      width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
      continue;
    }
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        std::ostringstream os;
        os << path.string() << ":" << line_no << ": non-numeric cell '" << cell << "'";
        throw IoError(os.str());
      }
    }
    if (line.back() == ',') {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": empty trailing cell";
      throw IoError(os.str());
    }
    if (width == 0) width = values.size();
    if (values.size() != width) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": ragged row (" << values.size() << " cells, expected "
         << width << ")";
      throw IoError(os.str());
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IoError(path.string() + ": no data rows");
  if (opts.target_columns >= width) throw ConfigError("load_csv: no feature columns left");
  const std::size_t d = width - opts.target_columns;
  Dataset ds;
  ds.features.resize(idx(d), idx(rows.size()));
  if (opts.target_columns > 0) ds.targets.resize(idx(opts.target_columns), idx(rows.size()));
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t i = 0; i < d; ++i) ds.features(idx(i), idx(s)) = rows[s][i];
    for (std::size_t k = 0; k < opts.target_columns; ++k) ds.targets(idx(k), idx(s)) = rows[s][d + k];
  }
  normalize_minmax(ds.features);
  if (opts.target_columns == 0) ds.make_autoencoder();
  return ds;
}

Matrix to_grayscale(const Matrix& rgb) {
  if (rgb.rows() % 3 != 0) throw StructuralError("to_grayscale: row count must be a multiple of 3");
  Matrix out(rgb.rows() / 3, rgb.cols());
  for (Eigen::Index p = 0; p < out.rows(); ++p) {
    out.row(p) = 0.299 * rgb.row(3 * p) + 0.587 * rgb.row(3 * p + 1) + 0.114 * rgb.row(3 * p + 2);
  }
  return out;
}

Dataset make_synthetic_eeg(const SyntheticEegOptions& opts) {
  if (opts.channels == 0 || opts.sources == 0) throw ConfigError("synthetic-eeg: empty shape");
  Rng rng = make_rng(opts.seed, 0xEE6);
  std::vector<double> freq(opts.sources), phase(opts.sources);
  for (std::size_t k = 0; k < opts.sources; ++k) {
    freq[k] = 0.002 + 0.05 * uniform01(rng);  // cycles per sample
    phase[k] = 2.0 * std::numbers::pi * uniform01(rng);
  }
  Matrix mix(idx(opts.channels), idx(opts.sources));
  for (Eigen::Index c = 0; c < mix.rows(); ++c) {
    for (Eigen::Index k = 0; k < mix.cols(); ++k) mix(c, k) = standard_normal(rng);
  }
  Matrix src(idx(opts.sources), idx(opts.samples));
  for (std::size_t t = 0; t < opts.samples; ++t) {
    for (std::size_t k = 0; k < opts.sources; ++k) {
      src(idx(k), idx(t)) = std::sin(2.0 * std::numbers::pi * freq[k] * static_cast<double>(t) + phase[k]);
    }
  }
  Dataset ds;
  ds.features = mix * src;
  for (Eigen::Index t = 0; t < ds.features.cols(); ++t) {
    for (Eigen::Index c = 0; c < ds.features.rows(); ++c) ds.features(c, t) += opts.noise * standard_normal(rng);
  }
  normalize_minmax(ds.features);
  ds.make_autoencoder();
  return ds;
}

Dataset apply_transform(const Dataset& ds, const TransformSpec& spec) {
  Dataset out = ds;
  const bool autoencoder = !ds.has_labels() && ds.targets.size() > 0 && ds.targets == ds.features;
  if (spec.invert) {
    if (ds.features.size() > 0 && (ds.features.minCoeff() < 0.0 || ds.features.maxCoeff() > 1.0)) {
      throw StructuralError("invert: features must lie in [0,1]");
    }
    out.features = (1.0 - ds.features.array()).matrix();
  }
  if (spec.scale.size() > 0 || spec.shift.size() > 0) {
    const auto d = ds.features.rows();
    const Vector a = spec.scale.size() > 0 ? spec.scale : Vector::Ones(d);
    const Vector b = spec.shift.size() > 0 ? spec.shift : Vector::Zero(d);
    if (a.size() != d || b.size() != d) throw StructuralError("transform: scale/shift size mismatch");
    out.features = (a.asDiagonal() * out.features).colwise() + b;
  }
  if (autoencoder) out.targets = out.features;
  return out;
}

Split split_tail(const Dataset& ds, std::size_t valid_count) {
  if (valid_count > ds.size()) throw ConfigError("split: validation set larger than the dataset");
  const std::size_t n_train = ds.size() - valid_count;
  std::vector<std::size_t> tr(n_train), va(valid_count);
  std::iota(tr.begin(), tr.end(), 0);
  std::iota(va.begin(), va.end(), n_train);
  return {ds.subset(tr), ds.subset(va)};
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace qdnn
