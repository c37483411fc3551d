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

#ifndef QDNN_CORE_TRAINER_HPP
#define QDNN_CORE_TRAINER_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/config.hpp"
#include "core/data.hpp"
#include "core/network.hpp"
#include "core/optim.hpp"
#include "core/outputs.hpp"

namespace qdnn {

// One row of the training log. Metrics are evaluated after the epoch, in
// eval mode, over the whole train and validation sets; wall_s only covers the
// optimization sweep.
struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double train_err = 0.0;  // error rate (categorical) or per-sample MSE
  double valid_nll = 0.0;
  double valid_err = 0.0;
  double wall_s = 0.0;
  bool diverged = false;
};

class TrainLog {
 public:
  static constexpr std::string_view kHeader =
      "epoch,train_nll,train_err,valid_nll,valid_err,wall_s,diverged";

  // Epochs must be strictly increasing.
  void add(const EpochRecord& r);
  const std::vector<EpochRecord>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  bool diverged() const { return !rows_.empty() && rows_.back().diverged; }

  static std::string format_row(const EpochRecord& r);
  void write(std::ostream& os) const;
  static TrainLog read(std::istream& is);

 private:
  std::vector<EpochRecord> rows_;
};

struct DataSplit {
  Dataset train;
  Dataset valid;
};

// Loads, transforms and splits the dataset a config refers to.
DataSplit prepare_data(const RunConfig& cfg);

struct Evaluation {
  double nll = 0.0;
  double err = 0.0;
};

// Mean NLL and error over a dataset, eval mode. NaN for an empty set.
Evaluation evaluate(const Network& net, const OutputModel& model, const Dataset& ds);

// Fresh, initialized network and output head for a config and data shape.
Network build_network(const RunConfig& cfg, std::size_t input_dim, std::size_t target_dim, Rng& rng);
OutputModel build_output_model(const RunConfig& cfg);

using ProgressFn = std::function<void(const std::string&)>;

struct TrainResult {
  TrainLog log;
  Evaluation initial_train;
  Evaluation initial_valid;
  Network net;
  OutputModel model;
  bool diverged = false;
  std::string divergence_reason;
};

// Runs cfg.epochs sweeps of minibatch steps. Writes the CSV log row by row
// when cfg.log_path is set and the final checkpoint when cfg.checkpoint_path
// is set. A step with a non-finite loss or update, or an epoch whose train NLL
// blows far past the initial one, ends the run: that epoch is logged with
// diverged = 1 and no further epochs run.
TrainResult cmd_train(const RunConfig& cfg, const DataSplit& data, const ProgressFn& progress = {});
TrainResult cmd_train(const RunConfig& cfg, const ProgressFn& progress = {});

struct GridEntry {
  double eta = 0.0;
  std::string log_path;
  double final_train_nll = 0.0;
  double final_valid_nll = 0.0;
  bool diverged = false;
  TrainLog log;
};

struct GridSummary {
  std::vector<GridEntry> runs;
  std::optional<std::size_t> best;  // index into runs
  bool best_at_boundary = false;
  std::string text() const;
};

// One training run per distinct step-size (sorted ascending). The best run
// has the lowest final validation NLL among runs that did not diverge (final
// train NLL when there is no validation set).
GridSummary cmd_grid(const RunConfig& cfg, const std::vector<double>& etas,
                     const ProgressFn& progress = {});

// "<stem>_lr<eta><ext>" next to the base log path.
std::string grid_log_path(const std::string& base, double eta);

struct BenchEntry {
  Algo algo = Algo::sgd;
  std::vector<double> epoch_seconds;
  double median_s = 0.0;
  double ratio = 0.0;  // median_s / median_s(sgd)
  bool diverged = false;
};

struct BenchReport {
  std::vector<BenchEntry> entries;
  std::string text() const;
  const BenchEntry* find(Algo a) const;
};

// Median per-epoch optimization time (at least 3 epochs) for each algorithm
// in cfg.bench_algos, and its ratio to sgd.
BenchReport cmd_bench(const RunConfig& cfg, const ProgressFn& progress = {});

}  // namespace qdnn

#endif  // QDNN_CORE_TRAINER_HPP
