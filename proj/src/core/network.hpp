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

#ifndef QDNN_CORE_NETWORK_HPP
#define QDNN_CORE_NETWORK_HPP

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/qdmetric.hpp"
#include "core/random.hpp"

namespace qdnn {

enum class Activation { sigmoid, tanh, relu, identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

// Incoming connections of one layer. Dense layers leave `sources` empty;
// sparse layers hold outputs x fan_in source indices, unit-major and sorted
// within each unit.
struct Connectivity {
  std::size_t fan_in = 0;
  std::vector<std::uint32_t> sources;

  bool dense() const { return sources.empty(); }
  bool operator==(const Connectivity&) const = default;
};

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Random connectivity for `sizes` (input first). Every hidden layer gets
// `fan_in` incoming connections per unit, drawn without replacement, going
// from the last hidden layer down to the first. The output layer is fully
// connected. A hidden layer whose previous layer has exactly `fan_in` units
// comes out dense.
std::vector<Connectivity> make_sparse_layout(std::span<const std::size_t> sizes,
                                             std::size_t fan_in, Rng& rng);

// outputs x inputs boolean view of a connectivity (true = weight exists).
Mask connectivity_mask(const Connectivity& c, std::size_t inputs, std::size_t outputs);

struct Layer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  Activation activation = Activation::identity;
  Connectivity connectivity;
  std::size_t offset = 0;  // first parameter of this layer

  std::size_t fan_in() const { return connectivity.dense() ? inputs : connectivity.fan_in; }
  std::size_t block_length() const { return 1 + fan_in(); }
  std::size_t num_params() const { return outputs * block_length(); }
};

enum class Mode { train, eval };

// Cached quantities of a batched forward pass; column s belongs to sample s.
struct ForwardTrace {
  // inputs[l]: what layer l saw, after dropout (inputs[0] is the data).
  std::vector<Matrix> inputs;
  // pre[l]: pre-activations of layer l. pre.back() is the network output.
  std::vector<Matrix> pre;
  // masks[l]: dropout multipliers applied to inputs[l], each 0 or 1/(1-p);
  // empty when no dropout was applied.
  std::vector<Matrix> masks;
  std::uint64_t version = 0;

  std::size_t batch() const { return static_cast<std::size_t>(inputs.front().cols()); }
  const Matrix& output() const { return pre.back(); }
};

// Feedforward perceptron. The parameter vector is split into one block per
// non-input unit: the bias, then the unit's incoming weights. Hidden layers
// use their activation; the output layer is affine and its pre-activation is
// the network output handed to the output model.
class Network {
 public:
  Network() = default;
  Network(std::vector<std::size_t> sizes, Activation hidden,
          std::vector<Connectivity> connectivity = {});
  Network(std::vector<std::size_t> sizes, std::vector<Activation> hidden,
          std::vector<Connectivity> connectivity = {});

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t num_params() const { return layout_.size(); }
  const BlockLayout& layout() const { return layout_; }

  // Dropout rate applied to the input of layer l (index 0 is the data).
  const std::vector<double>& dropout() const { return dropout_; }
  void set_dropout(std::vector<double> rates);
  // p on every hidden layer's output, nothing on the data.
  void set_hidden_dropout(double p);

  const Vector& params() const { return params_; }
  // Mutable parameters; any outstanding trace becomes stale.
  Vector& mutable_params() {
    ++version_;
    return params_;
  }
  void set_params(std::span<const double> p);
  std::uint64_t version() const { return version_; }

  // Row-major view of layer l's parameters: row j is unit j's block.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  layer_params(std::size_t l) const;

  // Dense outputs x inputs weight matrix of layer l (zeros where masked).
  Matrix dense_weights(std::size_t l) const;
  Vector biases(std::size_t l) const;

  // Scaled-uniform weights, a = sqrt(6 / (fan_in + fan_out)); zero biases.
  void init_params(Rng& rng);

  // x holds one sample per column. rng is only used in train mode with
  // dropout; it may be null otherwise.
  ForwardTrace forward(const Matrix& x, Mode mode, Rng* rng) const;
  Matrix predict(const Matrix& x) const { return forward(x, Mode::eval, nullptr).output(); }

  // Per-layer deltas d<seed_s, y_s>/d pre[l] for each sample s.
  std::vector<Matrix> backprop_deltas(const ForwardTrace& trace, const Matrix& output_seed) const;

  // Sum over samples of d<seed_s, y_s>/d theta. For a single-sample trace
  // this is the gradient of <seed, y>.
  Vector backprop(const ForwardTrace& trace, const Matrix& output_seed) const;

  // grad += sum_s weights[s] * (per-sample gradient carried by deltas).
  void accumulate_gradient(const ForwardTrace& trace, const std::vector<Matrix>& deltas,
                           const Vector& weights, std::span<double> grad) const;

  // Per-sample squared-gradient moments, weighted:
  //   diag += sum_s weights[s] * g_s^2
  //   row  += sum_s weights[s] * g_s[bias] * g_s      (per block, entries 1..)
  // Row entries are only written when `row` is non-empty.
  void accumulate_moments(const ForwardTrace& trace, const std::vector<Matrix>& deltas,
                          const Vector& weights, std::span<double> diag,
                          std::span<double> row) const;

 private:
  void build(std::vector<Activation> hidden, std::vector<Connectivity> connectivity);
  void check_trace(const ForwardTrace& trace) const;

  std::vector<std::size_t> sizes_;
  std::vector<Layer> layers_;
  BlockLayout layout_;
  Vector params_;
  std::vector<double> dropout_;
  std::uint64_t version_ = 0;
};

double activate(Activation a, double z);

// Reparameterizations producing networks with identical outputs.

// tanh network equal to a sigmoid network, using
// sigmoid(a) = (1 + tanh(a/2)) / 2. Every hidden activation must be sigmoid.
Network sigmoid_to_tanh(const Network& net);

// Parameters that give the same outputs on inputs 1 - x:
// first layer b' = b + sum_i w_i, w' = -w.
Network invert_inputs(const Network& net);

// Parameters that give the same outputs when input coordinate j is
// multiplied by c: first-layer weights from j divided by c.
Network rescale_input(const Network& net, std::size_t j, double c);

}  // namespace qdnn

#endif  // QDNN_CORE_NETWORK_HPP
