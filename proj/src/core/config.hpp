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

#ifndef QDNN_CORE_CONFIG_HPP
#define QDNN_CORE_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "core/network.hpp"
#include "core/optim.hpp"

namespace qdnn {

// Everything a train/grid/bench run needs. Keys of the flat key=value form
// are the long CLI flag names without the leading dashes.
struct RunConfig {
  // data
  std::string dataset = "mnist";  // mnist | csv | synthetic-eeg
  std::string data_dir = "data/mnist-5k";
  std::string csv_path;
  std::size_t csv_targets = 0;    // 0: autoencode
  bool csv_header = false;
  std::string task = "classify";  // classify | autoencode (mnist)
  std::size_t train_limit = 0;    // keep the first N samples; 0 keeps all
  long valid_count = -1;          // -1: 10000 if N >= 20000, else N / 5
  std::size_t eeg_samples = 12000;
  std::size_t eeg_channels = 56;
  std::size_t eeg_sources = 8;
  double eeg_noise = 0.1;
  bool invert_inputs = false;

  // model
  std::vector<std::size_t> arch{784, 100, 10};
  Activation activation = Activation::sigmoid;
  std::string output = "categorical";
  double dropout = 0.0;  // hidden-layer rate, 0 disables
  std::size_t sparsity = 0;  // incoming connections per hidden unit, 0 = dense

  // optimization
  OptimizerConfig optimizer;
  std::vector<double> lr_grid{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::size_t epochs = 10;
  std::size_t batch_size = 100;
  std::size_t warmup = 0;  // samples used to initialize the metric
  std::vector<Algo> bench_algos{Algo::sgd,    Algo::adagrad, Algo::dop,  Algo::qdop,
                                Algo::dmcnat, Algo::qdmcnat, Algo::dnat, Algo::qdnat};

  std::uint64_t seed = 1;
  std::string log_path = "train_log.csv";
  std::string checkpoint_path;

  // Parses and applies one key=value pair; throws ConfigError on unknown
  // keys or malformed values.
  void set(std::string_view key, std::string_view value);
  // Flat text file: one key=value per line, '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  // Canonical key=value dump (round-trips through load_file).
  std::string to_text() const;

  void validate() const;
};

std::vector<std::size_t> parse_size_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);

}  // namespace qdnn

#endif  // QDNN_CORE_CONFIG_HPP
