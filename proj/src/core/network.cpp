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

#include "core/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "core/error.hpp"

namespace qdnn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void apply_activation(Activation a, const Matrix& pre, Matrix& out) {
  switch (a) {
    case Activation::sigmoid:
      out = pre.unaryExpr([](double z) { return sigmoid(z); });
      break;
    case Activation::tanh:
      out = pre.array().tanh().matrix();
      break;
    case Activation::relu:
      out = pre.cwiseMax(0.0);
      break;
    case Activation::identity:
      out = pre;
      break;
  }
}

// Multiplies g in place by the activation derivative at `pre`.
void scale_by_derivative(Activation a, const Matrix& pre, Matrix& g) {
  switch (a) {
    case Activation::sigmoid:
      g.array() *= pre.unaryExpr([](double z) {
                        const double s = sigmoid(z);
                        return s * (1.0 - s);
                      }).array();
      break;
    case Activation::tanh:
      g.array() *= 1.0 - pre.array().tanh().square();
      break;
    case Activation::relu:
      // derivative at 0 is 0
      g.array() *= (pre.array() > 0.0).cast<double>();
      break;
    case Activation::identity:
      break;
  }
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::sigmoid: return sigmoid(z);
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::identity: return z;
  }
  return z;
}

std::vector<Connectivity> make_sparse_layout(std::span<const std::size_t> sizes,
                                             std::size_t fan_in, Rng& rng) {
  if (sizes.size() < 2) throw StructuralError("make_sparse_layout: need at least two layers");
  const std::size_t num_layers = sizes.size() - 1;
  std::vector<Connectivity> out(num_layers);
  if (fan_in == 0) throw ConfigError("make_sparse_layout: fan_in must be >= 1");
  std::vector<std::uint32_t> pool;
  // Built from the output towards the input; the output layer stays dense.
  for (std::size_t l = num_layers - 1; l-- > 0;) {
    const std::size_t prev = sizes[l];
    const std::size_t units = sizes[l + 1];
    if (fan_in > prev) {
      std::ostringstream os;
      os << "make_sparse_layout: fan_in " << fan_in << " exceeds previous layer size " << prev;
      throw ConfigError(os.str());
    }
    if (fan_in == prev) continue;
    Connectivity& c = out[l];
    c.fan_in = fan_in;
    c.sources.resize(units * fan_in);
    pool.resize(prev);
    for (std::size_t j = 0; j < units; ++j) {
      std::iota(pool.begin(), pool.end(), 0u);
      for (std::size_t i = 0; i < fan_in; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, prev - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(fan_in));
      std::copy_n(pool.begin(), fan_in, c.sources.begin() + static_cast<std::ptrdiff_t>(j * fan_in));
    }
  }
  return out;
}

Mask connectivity_mask(const Connectivity& c, std::size_t inputs, std::size_t outputs) {
  if (c.dense()) return Mask::Constant(idx(outputs), idx(inputs), true);
  Mask m = Mask::Constant(idx(outputs), idx(inputs), false);
  for (std::size_t j = 0; j < outputs; ++j) {
    for (std::size_t i = 0; i < c.fan_in; ++i) m(idx(j), idx(c.sources[j * c.fan_in + i])) = true;
  }
  return m;
}

Network::Network(std::vector<std::size_t> sizes, Activation hidden,
                 std::vector<Connectivity> connectivity)
    : sizes_(std::move(sizes)) {
  const std::size_t n_hidden = sizes_.size() >= 2 ? sizes_.size() - 2 : 0;
  build(std::vector<Activation>(n_hidden, hidden), std::move(connectivity));
}

Network::Network(std::vector<std::size_t> sizes, std::vector<Activation> hidden,
                 std::vector<Connectivity> connectivity)
    : sizes_(std::move(sizes)) {
  build(std::move(hidden), std::move(connectivity));
}

void Network::build(std::vector<Activation> hidden, std::vector<Connectivity> connectivity) {
  if (sizes_.size() < 2) throw StructuralError("Network: need an input and an output layer");
  const std::size_t num_layers = sizes_.size() - 1;
  if (hidden.size() != num_layers - 1) {
    throw StructuralError("Network: one activation per hidden layer expected");
  }
  if (!connectivity.empty() && connectivity.size() != num_layers) {
    throw StructuralError("Network: one connectivity entry per layer expected");
  }
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    if (sizes_[l] == 0) throw StructuralError("Network: non-input layers must be non-empty");
  }
  layers_.clear();
  layout_ = BlockLayout();
  std::size_t offset = 0;
  for (std::size_t l = 0; l < num_layers; ++l) {
    Layer layer;
    layer.inputs = sizes_[l];
    layer.outputs = sizes_[l + 1];
    layer.activation = l + 1 < num_layers ? hidden[l] : Activation::identity;
    if (!connectivity.empty()) layer.connectivity = std::move(connectivity[l]);
    const Connectivity& c = layer.connectivity;
    if (!c.dense()) {
      if (c.sources.size() != layer.outputs * c.fan_in || c.fan_in == 0) {
        throw StructuralError("Network: sparse connectivity has the wrong shape");
      }
      for (std::size_t j = 0; j < layer.outputs; ++j) {
        for (std::size_t i = 0; i < c.fan_in; ++i) {
          const auto s = c.sources[j * c.fan_in + i];
          if (s >= layer.inputs) throw StructuralError("Network: connection source out of range");
          if (i > 0 && s <= c.sources[j * c.fan_in + i - 1]) {
            throw StructuralError("Network: connection sources must be sorted and distinct");
          }
        }
      }
    }
    layer.offset = offset;
    for (std::size_t j = 0; j < layer.outputs; ++j) layout_.append(layer.block_length());
    offset += layer.num_params();
    layers_.push_back(std::move(layer));
  }
  params_ = Vector::Zero(idx(offset));
  dropout_.assign(num_layers, 0.0);
  ++version_;
}

void Network::set_dropout(std::vector<double> rates) {
  if (rates.size() != layers_.size()) {
    throw StructuralError("set_dropout: one rate per layer input expected");
  }
  for (double p : rates) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rate must lie in [0,1)");
  }
  dropout_ = std::move(rates);
}

void Network::set_hidden_dropout(double p) {
  std::vector<double> rates(layers_.size(), p);
  rates[0] = 0.0;
  set_dropout(std::move(rates));
}

void Network::set_params(std::span<const double> p) {
  if (p.size() != num_params()) throw StructuralError("set_params: wrong parameter count");
  std::copy(p.begin(), p.end(), mutable_params().data());
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
Network::layer_params(std::size_t l) const {
  const Layer& layer = layers_[l];
  return ConstRowMap(params_.data() + layer.offset, idx(layer.outputs), idx(layer.block_length()));
}

Matrix Network::dense_weights(std::size_t l) const {
  const Layer& layer = layers_[l];
  const auto p = layer_params(l);
  if (layer.connectivity.dense()) return p.rightCols(idx(layer.inputs));
  Matrix w = Matrix::Zero(idx(layer.outputs), idx(layer.inputs));
  const auto& c = layer.connectivity;
  for (std::size_t j = 0; j < layer.outputs; ++j) {
    for (std::size_t i = 0; i < c.fan_in; ++i) {
      w(idx(j), idx(c.sources[j * c.fan_in + i])) = p(idx(j), idx(1 + i));
    }
  }
  return w;
}

Vector Network::biases(std::size_t l) const { return layer_params(l).col(0); }

void Network::init_params(Rng& rng) {
  Vector& p = mutable_params();
  for (const Layer& layer : layers_) {
    const double fan_in = static_cast<double>(layer.fan_in());
    const double fan_out =
        layer.inputs == 0 ? 0.0 : static_cast<double>(layer.outputs) * fan_in / static_cast<double>(layer.inputs);
    const double a = fan_in + fan_out > 0.0 ? std::sqrt(6.0 / (fan_in + fan_out)) : 0.0;
    std::uniform_real_distribution<double> dist(-a, a);
    RowMap m(p.data() + layer.offset, idx(layer.outputs), idx(layer.block_length()));
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
      m(j, 0) = 0.0;
      for (Eigen::Index i = 1; i < m.cols(); ++i) m(j, i) = dist(rng);
    }
  }
}

ForwardTrace Network::forward(const Matrix& x, Mode mode, Rng* rng) const {
  if (x.rows() != idx(input_size())) {
    std::ostringstream os;
    os << "forward: input has " << x.rows() << " rows, network expects " << input_size();
    throw StructuralError(os.str());
  }
  const Eigen::Index batch = x.cols();
  ForwardTrace t;
  t.version = version_;
  t.inputs.resize(layers_.size());
  t.pre.resize(layers_.size());
  t.masks.resize(layers_.size());
  Matrix h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const double p = dropout_[l];
    if (mode == Mode::train && p > 0.0) {
      if (rng == nullptr) throw StructuralError("forward: dropout in train mode needs an rng");
      Matrix mask(h.rows(), h.cols());
      const double keep = 1.0 / (1.0 - p);
      for (Eigen::Index s = 0; s < mask.cols(); ++s) {
        for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, s) = uniform01(*rng) < p ? 0.0 : keep;
      }
      h.array() *= mask.array();
      t.masks[l] = std::move(mask);
    }
    const auto params = layer_params(l);
    Matrix z(idx(layer.outputs), batch);
    if (layer.connectivity.dense()) {
      z.noalias() = params.rightCols(idx(layer.inputs)) * h;
      z.colwise() += params.col(0);
    } else {
      const auto& c = layer.connectivity;
      for (Eigen::Index s = 0; s < batch; ++s) {
        for (std::size_t j = 0; j < layer.outputs; ++j) {
          double acc = params(idx(j), 0);
          const std::uint32_t* src = c.sources.data() + j * c.fan_in;
          for (std::size_t i = 0; i < c.fan_in; ++i) acc += params(idx(j), idx(1 + i)) * h(src[i], s);
          z(idx(j), s) = acc;
        }
      }
    }
    t.inputs[l] = std::move(h);
    if (l + 1 < layers_.size()) apply_activation(layer.activation, z, h);
    t.pre[l] = std::move(z);
  }
  return t;
}

void Network::check_trace(const ForwardTrace& trace) const {
  if (trace.version != version_) {
    throw StructuralError("backprop: trace is stale (parameters changed since forward)");
  }
  if (trace.pre.size() != layers_.size()) throw StructuralError("backprop: trace does not match network");
}

std::vector<Matrix> Network::backprop_deltas(const ForwardTrace& trace, const Matrix& output_seed) const {
  check_trace(trace);
  if (output_seed.rows() != idx(output_size()) || output_seed.cols() != idx(trace.batch())) {
    throw StructuralError("backprop: output seed shape does not match the trace");
  }
  std::vector<Matrix> deltas(layers_.size());
  deltas.back() = output_seed;
  for (std::size_t l = layers_.size() - 1; l > 0; --l) {
    const Layer& layer = layers_[l];
    const auto params = layer_params(l);
    const Matrix& d = deltas[l];
    Matrix g;
    if (layer.connectivity.dense()) {
      g.noalias() = params.rightCols(idx(layer.inputs)).transpose() * d;
    } else {
      g = Matrix::Zero(idx(layer.inputs), d.cols());
      const auto& c = layer.connectivity;
      for (Eigen::Index s = 0; s < d.cols(); ++s) {
        for (std::size_t j = 0; j < layer.outputs; ++j) {
          const double dj = d(idx(j), s);
          const std::uint32_t* src = c.sources.data() + j * c.fan_in;
          for (std::size_t i = 0; i < c.fan_in; ++i) g(src[i], s) += params(idx(j), idx(1 + i)) * dj;
        }
      }
    }
    if (trace.masks[l].size() != 0) g.array() *= trace.masks[l].array();
    scale_by_derivative(layers_[l - 1].activation, trace.pre[l - 1], g);
    deltas[l - 1] = std::move(g);
  }
  return deltas;
}

Vector Network::backprop(const ForwardTrace& trace, const Matrix& output_seed) const {
  const auto deltas = backprop_deltas(trace, output_seed);
  Vector grad = Vector::Zero(idx(num_params()));
  accumulate_gradient(trace, deltas, Vector::Ones(idx(trace.batch())), as_span(grad));
  return grad;
}

void Network::accumulate_gradient(const ForwardTrace& trace, const std::vector<Matrix>& deltas,
                                  const Vector& weights, std::span<double> grad) const {
  if (grad.size() != num_params()) throw StructuralError("accumulate_gradient: wrong output size");
  if (weights.size() != idx(trace.batch())) throw StructuralError("accumulate_gradient: wrong weight count");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const Matrix& x = trace.inputs[l];
    const Matrix d = deltas[l] * weights.asDiagonal();
    RowMap g(grad.data() + layer.offset, idx(layer.outputs), idx(layer.block_length()));
    g.col(0) += d.rowwise().sum();
    if (layer.connectivity.dense()) {
      g.rightCols(idx(layer.inputs)).noalias() += d * x.transpose();
    } else {
      const auto& c = layer.connectivity;
      for (std::size_t j = 0; j < layer.outputs; ++j) {
        const std::uint32_t* src = c.sources.data() + j * c.fan_in;
        for (std::size_t i = 0; i < c.fan_in; ++i) {
          g(idx(j), idx(1 + i)) += d.row(idx(j)).dot(x.row(src[i]));
        }
      }
    }
  }
}

void Network::accumulate_moments(const ForwardTrace& trace, const std::vector<Matrix>& deltas,
                                 const Vector& weights, std::span<double> diag,
                                 std::span<double> row) const {
  if (diag.size() != num_params() || (!row.empty() && row.size() != num_params())) {
    throw StructuralError("accumulate_moments: wrong output size");
  }
  if (weights.size() != idx(trace.batch())) throw StructuralError("accumulate_moments: wrong weight count");
  const bool with_row = !row.empty();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const Matrix& x = trace.inputs[l];
    // squared deltas carry the bias-bias term; the bias-weight term is
    // delta^2 * x and the weight-weight term delta^2 * x^2
    const Matrix d2 = deltas[l].cwiseAbs2() * weights.asDiagonal();
    RowMap dm(diag.data() + layer.offset, idx(layer.outputs), idx(layer.block_length()));
    dm.col(0) += d2.rowwise().sum();
    if (layer.connectivity.dense()) {
      if (layer.inputs == 0) continue;
      dm.rightCols(idx(layer.inputs)).noalias() += d2 * x.cwiseAbs2().transpose();
      if (with_row) {
        RowMap rm(row.data() + layer.offset, idx(layer.outputs), idx(layer.block_length()));
        rm.rightCols(idx(layer.inputs)).noalias() += d2 * x.transpose();
      }
    } else {
      const auto& c = layer.connectivity;
      for (std::size_t j = 0; j < layer.outputs; ++j) {
        const std::uint32_t* src = c.sources.data() + j * c.fan_in;
        double* drow = diag.data() + layer.offset + j * layer.block_length();
        double* rrow = with_row ? row.data() + layer.offset + j * layer.block_length() : nullptr;
        for (std::size_t i = 0; i < c.fan_in; ++i) {
          double sd = 0.0;
          double sr = 0.0;
          for (Eigen::Index s = 0; s < d2.cols(); ++s) {
            const double xv = x(src[i], s);
            sd += d2(idx(j), s) * xv * xv;
            sr += d2(idx(j), s) * xv;
          }
          drow[1 + i] += sd;
          if (rrow) rrow[1 + i] += sr;
        }
      }
    }
  }
}

Network sigmoid_to_tanh(const Network& net) {
  std::vector<Activation> hidden;
  std::vector<Connectivity> conn;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Layer& layer = net.layers()[l];
    if (l + 1 < net.layers().size()) {
      if (layer.activation != Activation::sigmoid) {
        throw StructuralError("sigmoid_to_tanh: every hidden layer must be sigmoid");
      }
      hidden.push_back(Activation::tanh);
    }
    conn.push_back(layer.connectivity);
  }
  Network out(net.sizes(), hidden, conn);
  out.set_dropout(net.dropout());
  Vector p = net.params();
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Layer& layer = net.layers()[l];
    RowMap m(p.data() + layer.offset, idx(layer.outputs), idx(layer.block_length()));
    if (l > 0) {
      // the previous layer's activity h becomes (h' + 1) / 2
      m.col(0) += 0.5 * m.rightCols(m.cols() - 1).rowwise().sum();
      m.rightCols(m.cols() - 1) *= 0.5;
    }
    // tanh(a/2) carries sigmoid(a), so hidden pre-activations halve
    if (l + 1 < net.layers().size()) m *= 0.5;
  }
  out.set_params(as_span(p));
  return out;
}

Network invert_inputs(const Network& net) {
  Network out = net;
  Vector& p = out.mutable_params();
  const Layer& layer = net.layers().front();
  RowMap m(p.data() + layer.offset, idx(layer.outputs), idx(layer.block_length()));
  m.col(0) += m.rightCols(m.cols() - 1).rowwise().sum();
  m.rightCols(m.cols() - 1) *= -1.0;
  return out;
}

Network rescale_input(const Network& net, std::size_t j, double c) {
  if (j >= net.input_size()) throw StructuralError("rescale_input: coordinate out of range");
  Network out = net;
  Vector& p = out.mutable_params();
  const Layer& layer = net.layers().front();
  RowMap m(p.data() + layer.offset, idx(layer.outputs), idx(layer.block_length()));
  if (layer.connectivity.dense()) {
    m.col(idx(1 + j)) /= c;
  } else {
    const auto& conn = layer.connectivity;
    for (std::size_t u = 0; u < layer.outputs; ++u) {
      for (std::size_t i = 0; i < conn.fan_in; ++i) {
        if (conn.sources[u * conn.fan_in + i] == j) m(idx(u), idx(1 + i)) /= c;
      }
    }
  }
  return out;
}

}  // namespace qdnn
