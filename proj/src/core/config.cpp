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

#include "core/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace qdnn {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  }
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + std::string(v) + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += f(xs[i]);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (auto part : split(text, ',')) out.push_back(to_size("list", part));
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (auto part : split(text, ',')) out.push_back(to_double("list", part));
  return out;
}

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  if (key == "dataset") {
    if (v != "mnist" && v != "csv" && v != "synthetic-eeg") {
      throw ConfigError("dataset: expected mnist, csv or synthetic-eeg");
    }
    dataset = v;
  } else if (key == "data-dir") {
    data_dir = v;
  } else if (key == "csv") {
    csv_path = v;
  } else if (key == "csv-targets") {
    csv_targets = to_size(key, v);
  } else if (key == "csv-header") {
    csv_header = to_bool(key, v);
  } else if (key == "task") {
    if (v != "classify" && v != "autoencode") throw ConfigError("task: expected classify or autoencode");
    task = v;
  } else if (key == "train-limit") {
    train_limit = to_size(key, v);
  } else if (key == "valid-count") {
    valid_count = v == "auto" ? -1 : static_cast<long>(to_size(key, v));
  } else if (key == "eeg-samples") {
    eeg_samples = to_size(key, v);
  } else if (key == "eeg-channels") {
    eeg_channels = to_size(key, v);
  } else if (key == "eeg-sources") {
    eeg_sources = to_size(key, v);
  } else if (key == "eeg-noise") {
    eeg_noise = to_double(key, v);
  } else if (key == "invert-inputs") {
    invert_inputs = to_bool(key, v);
  } else if (key == "arch") {
    try {
      arch = parse_size_list(v);
    } catch (const ConfigError&) {
      throw ConfigError("arch: expected comma-separated layer sizes, e.g. 784,100,10");
    }
  } else if (key == "activation") {
    activation = parse_activation(v);
  } else if (key == "output") {
    output = v;
  } else if (key == "dropout") {
    dropout = to_double(key, v);
  } else if (key == "sparsity") {
    sparsity = to_size(key, v);
  } else if (key == "algo") {
    optimizer.algo = parse_algo(v);
  } else if (key == "lr") {
    optimizer.eta = to_double(key, v);
  } else if (key == "lr-grid") {
    try {
      lr_grid = parse_double_list(v);
    } catch (const ConfigError&) {
      throw ConfigError("lr-grid: expected comma-separated step-sizes");
    }
  } else if (key == "gamma") {
    optimizer.gamma = to_double(key, v);
  } else if (key == "epsilon") {
    optimizer.epsilon = to_double(key, v);
  } else if (key == "nmc") {
    optimizer.n_mc = static_cast<int>(to_size(key, v));
  } else if (key == "epochs") {
    epochs = to_size(key, v);
  } else if (key == "batch-size") {
    batch_size = to_size(key, v);
  } else if (key == "warmup") {
    warmup = to_size(key, v);
  } else if (key == "algos") {
    bench_algos.clear();
    for (auto a : split(v, ',')) bench_algos.push_back(parse_algo(a));
  } else if (key == "seed") {
    seed = to_size(key, v);
  } else if (key == "log") {
    log_path = v;
  } else if (key == "checkpoint") {
    checkpoint_path = v;
  } else {
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      set(trim(s.substr(0, eq)), s.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "dataset=" << dataset << '\n'
     << "data-dir=" << data_dir << '\n'
     << "csv=" << csv_path << '\n'
     << "csv-targets=" << csv_targets << '\n'
     << "csv-header=" << (csv_header ? "true" : "false") << '\n'
     << "task=" << task << '\n'
     << "train-limit=" << train_limit << '\n'
     << "valid-count=" << (valid_count < 0 ? std::string("auto") : std::to_string(valid_count)) << '\n'
     << "eeg-samples=" << eeg_samples << '\n'
     << "eeg-channels=" << eeg_channels << '\n'
     << "eeg-sources=" << eeg_sources << '\n'
     << "eeg-noise=" << fmt(eeg_noise) << '\n'
     << "invert-inputs=" << (invert_inputs ? "true" : "false") << '\n'
     << "arch=" << join(arch, [](std::size_t n) { return std::to_string(n); }) << '\n'
     << "activation=" << to_string(activation) << '\n'
     << "output=" << output << '\n'
     << "dropout=" << fmt(dropout) << '\n'
     << "sparsity=" << sparsity << '\n'
     << "algo=" << to_string(optimizer.algo) << '\n'
     << "lr=" << fmt(optimizer.eta) << '\n'
     << "lr-grid=" << join(lr_grid, fmt) << '\n'
     << "gamma=" << fmt(optimizer.gamma) << '\n'
     << "epsilon=" << fmt(optimizer.epsilon) << '\n'
     << "nmc=" << optimizer.n_mc << '\n'
     << "epochs=" << epochs << '\n'
     << "batch-size=" << batch_size << '\n'
     << "warmup=" << warmup << '\n'
     << "algos=" << join(bench_algos, [](Algo a) { return std::string(to_string(a)); }) << '\n'
     << "seed=" << seed << '\n'
     << "log=" << log_path << '\n'
     << "checkpoint=" << checkpoint_path << '\n';
  return os.str();
}

void RunConfig::validate() const {
  optimizer.validate();
  if (arch.size() < 2) throw ConfigError("arch: need at least an input and an output layer");
  for (std::size_t i = 1; i < arch.size(); ++i) {
    if (arch[i] == 0) throw ConfigError("arch: layer sizes must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch-size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
  if (output != "categorical" && output != "gaussian" && output != "gaussian-learned" &&
      output != "bernoulli") {
    throw ConfigError("output: expected categorical, gaussian, gaussian-learned or bernoulli");
  }
  if (lr_grid.empty()) throw ConfigError("lr-grid: at least one step-size required");
  for (double eta : lr_grid) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("lr-grid: step-sizes must be positive");
  }
  if (dataset == "mnist") {
    if (!std::filesystem::is_directory(data_dir)) {
      throw ConfigError("data-dir '" + data_dir + "' does not exist");
    }
  } else if (dataset == "csv") {
    if (csv_path.empty() || !std::filesystem::exists(csv_path)) {
      throw ConfigError("csv file '" + csv_path + "' does not exist");
    }
  }
}

}  // namespace qdnn
