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

#include "core/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/checkpoint.hpp"
#include "core/error.hpp"

namespace qdnn {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// An epoch whose train NLL exceeds the untrained one by this many times its
// magnitude counts as diverged even if every value stayed finite.
constexpr double kBlowupFactor = 100.0;

bool blown_up(double nll, double initial) {
  return !std::isfinite(nll) || nll > initial + kBlowupFactor * std::max(1.0, std::abs(initial));
}

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_cell(const std::string& s) {
  if (s == "nan") return kNaN;
  return std::stod(s);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return kNaN;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Targets slice_targets(const Dataset& ds, Eigen::Index start, Eigen::Index len) {
  Targets t;
  if (ds.has_labels()) {
    t.labels.assign(ds.labels.begin() + start, ds.labels.begin() + start + len);
  } else {
    t.values = ds.targets.middleCols(start, len);
  }
  return t;
}

}  // namespace

void TrainLog::add(const EpochRecord& r) {
  if (!rows_.empty() && r.epoch <= rows_.back().epoch) {
    throw StructuralError("TrainLog: epochs must be strictly increasing");
  }
  rows_.push_back(r);
}

std::string TrainLog::format_row(const EpochRecord& r) {
  std::ostringstream os;
  os << r.epoch << ',' << g17(r.train_nll) << ',' << g17(r.train_err) << ',' << g17(r.valid_nll)
     << ',' << g17(r.valid_err) << ',' << g17(r.wall_s) << ',' << (r.diverged ? 1 : 0);
  return os.str();
}

void TrainLog::write(std::ostream& os) const {
  os << kHeader << '\n';
  for (const auto& r : rows_) os << format_row(r) << '\n';
}

TrainLog TrainLog::read(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kHeader) throw IoError("train log: unexpected header");
  TrainLog log;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw IoError("train log: malformed row '" + line + "'");
    EpochRecord r;
    r.epoch = std::stoull(cells[0]);
    r.train_nll = parse_cell(cells[1]);
    r.train_err = parse_cell(cells[2]);
    r.valid_nll = parse_cell(cells[3]);
    r.valid_err = parse_cell(cells[4]);
    r.wall_s = parse_cell(cells[5]);
    r.diverged = cells[6] == "1";
    log.add(r);
  }
  return log;
}

DataSplit prepare_data(const RunConfig& cfg) {
  Dataset ds;
  if (cfg.dataset == "mnist") {
    ds = load_mnist_dir(cfg.data_dir);
    if (cfg.task == "autoencode") ds.make_autoencoder();
  } else if (cfg.dataset == "csv") {
    ds = load_csv(cfg.csv_path, {cfg.csv_targets, cfg.csv_header});
  } else if (cfg.dataset == "synthetic-eeg") {
    ds = make_synthetic_eeg({cfg.eeg_samples, cfg.eeg_channels, cfg.eeg_sources, cfg.eeg_noise, cfg.seed});
  } else {
    throw ConfigError("unknown dataset '" + cfg.dataset + "'");
  }
  if (cfg.train_limit > 0) ds = ds.head(cfg.train_limit);
  if (cfg.invert_inputs) {
    TransformSpec spec;
    spec.invert = true;
    ds = apply_transform(ds, spec);
  }
  std::size_t valid = 0;
  if (cfg.valid_count >= 0) {
    valid = static_cast<std::size_t>(cfg.valid_count);
  } else {
    valid = ds.size() >= 20000 ? 10000 : ds.size() / 5;
  }
  Split s = split_tail(ds, valid);
  return {std::move(s.train), std::move(s.valid)};
}

Evaluation evaluate(const Network& net, const OutputModel& model, const Dataset& ds) {
  if (ds.size() == 0) return {kNaN, kNaN};
  constexpr Eigen::Index kChunk = 1000;
  double nll = 0.0;
  double err = 0.0;
  const auto n = static_cast<Eigen::Index>(ds.size());
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n - start);
    const Matrix a = net.predict(ds.features.middleCols(start, len));
    const Targets t = slice_targets(ds, start, len);
    nll += model.loss(a, t).sum();
    err += model.error_sum(a, t);
  }
  return {nll / static_cast<double>(n), err / static_cast<double>(n)};
}

OutputModel build_output_model(const RunConfig& cfg) {
  return OutputModel::parse(cfg.output, cfg.arch.back());
}

Network build_network(const RunConfig& cfg, std::size_t input_dim, std::size_t target_dim, Rng& rng) {
  if (cfg.arch.front() != input_dim) {
    std::ostringstream os;
    os << "arch: input layer has " << cfg.arch.front() << " units but the data has " << input_dim
       << " features";
    throw ConfigError(os.str());
  }
  if (cfg.arch.back() != target_dim) {
    std::ostringstream os;
    os << "arch: output layer has " << cfg.arch.back() << " units but the targets have dimension "
       << target_dim;
    throw ConfigError(os.str());
  }
  std::vector<Connectivity> conn;
  if (cfg.sparsity > 0) conn = make_sparse_layout(cfg.arch, cfg.sparsity, rng);
  Network net(cfg.arch, cfg.activation, conn);
  if (cfg.dropout > 0.0) net.set_hidden_dropout(cfg.dropout);
  net.init_params(rng);
  return net;
}

TrainResult cmd_train(const RunConfig& cfg, const DataSplit& data, const ProgressFn& progress) {
  cfg.validate();
  if (data.train.size() == 0) throw ConfigError("train: empty training set");
  OutputModel model = build_output_model(cfg);
  if ((model.kind() == OutputKind::categorical) != data.train.has_labels()) {
    throw ConfigError("output model '" + cfg.output + "' does not match the dataset's targets");
  }
  Rng init_rng = make_rng(cfg.seed, 1);
  Rng order_rng = make_rng(cfg.seed, 2);
  Rng step_rng = make_rng(cfg.seed, 3);
  Network net = build_network(cfg, data.train.dim(), data.train.target_dim(), init_rng);
  Optimizer opt(cfg.optimizer, net.layout());

  std::ofstream log_file;
  if (!cfg.log_path.empty()) {
    std::error_code ignored;
    std::filesystem::create_directories(std::filesystem::path(cfg.log_path).parent_path(), ignored);
    log_file.open(cfg.log_path);
    if (!log_file) throw IoError("cannot write log " + cfg.log_path);
    log_file << TrainLog::kHeader << '\n' << std::flush;
  }

  TrainResult result;
  result.initial_train = evaluate(net, model, data.train);
  result.initial_valid = evaluate(net, model, data.valid);
  if (progress) {
    std::ostringstream os;
    os << "epoch 0 train_nll " << g17(result.initial_train.nll) << " valid_nll "
       << g17(result.initial_valid.nll);
    progress(os.str());
  }

  if (cfg.warmup > 0 && opt.has_metric()) {
    const auto n = static_cast<Eigen::Index>(std::min(cfg.warmup, data.train.size()));
    opt.warmup(net, model, data.train.features.leftCols(n), slice_targets(data.train, 0, n), step_rng);
  }

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    const auto t0 = Clock::now();
    try {
      for (const auto& batch : minibatches(data.train.size(), cfg.batch_size, order_rng)) {
        opt.step(net, model, data.train.batch_features(batch), data.train.batch_targets(batch), step_rng);
      }
    } catch (const DivergenceError& e) {
      rec.diverged = true;
      rec.train_nll = rec.train_err = rec.valid_nll = rec.valid_err = kNaN;
      result.divergence_reason = e.what();
    }
    rec.wall_s = seconds_since(t0);
    if (!rec.diverged) {
      const Evaluation tr = evaluate(net, model, data.train);
      const Evaluation va = evaluate(net, model, data.valid);
      rec.train_nll = tr.nll;
      rec.train_err = tr.err;
      rec.valid_nll = va.nll;
      rec.valid_err = va.err;
      if (blown_up(tr.nll, result.initial_train.nll)) {
        rec.diverged = true;
        result.divergence_reason = "training loss blew up to " + g17(tr.nll);
      }
    }
    if (rec.diverged) result.diverged = true;
    result.log.add(rec);
    if (log_file.is_open()) log_file << TrainLog::format_row(rec) << '\n' << std::flush;
    if (progress) {
      std::ostringstream os;
      if (rec.diverged) {
        os << "epoch " << epoch << " diverged (eta " << g17(cfg.optimizer.eta) << "): " << result.divergence_reason;
      } else {
        os << "epoch " << epoch << " train_nll " << g17(rec.train_nll) << " train_err " << g17(rec.train_err)
           << " valid_nll " << g17(rec.valid_nll) << " valid_err " << g17(rec.valid_err) << " wall_s "
           << g17(rec.wall_s);
      }
      progress(os.str());
    }
    if (rec.diverged) break;
  }
  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, net, model);
  result.net = std::move(net);
  result.model = std::move(model);
  return result;
}

TrainResult cmd_train(const RunConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  return cmd_train(cfg, prepare_data(cfg), progress);
}

std::string grid_log_path(const std::string& base, double eta) {
  const std::filesystem::path p = base.empty() ? std::filesystem::path("grid.csv") : std::filesystem::path(base);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", eta);
  const std::string ext = p.has_extension() ? p.extension().string() : std::string(".csv");
  return (p.parent_path() / (p.stem().string() + "_lr" + buf + ext)).string();
}

GridSummary cmd_grid(const RunConfig& cfg, const std::vector<double>& etas, const ProgressFn& progress) {
  if (etas.empty()) throw ConfigError("grid: at least one step-size required");
  std::vector<double> grid = etas;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  RunConfig base = cfg;
  base.lr_grid = grid;
  base.validate();
  const DataSplit data = prepare_data(base);

  GridSummary summary;
  for (double eta : grid) {
    RunConfig run = base;
    run.optimizer.eta = eta;
    run.log_path = grid_log_path(cfg.log_path, eta);
    run.checkpoint_path.clear();
    if (progress) progress("grid: " + std::string(to_string(run.optimizer.algo)) + " eta " + g17(eta));
    TrainResult r = cmd_train(run, data, progress);
    GridEntry e;
    e.eta = eta;
    e.log_path = run.log_path;
    e.diverged = r.diverged;
    e.final_train_nll = r.log.empty() ? r.initial_train.nll : r.log.rows().back().train_nll;
    e.final_valid_nll = r.log.empty() ? r.initial_valid.nll : r.log.rows().back().valid_nll;
    e.log = std::move(r.log);
    summary.runs.push_back(std::move(e));
  }
  const bool has_valid = data.valid.size() > 0;
  for (std::size_t i = 0; i < summary.runs.size(); ++i) {
    const auto& e = summary.runs[i];
    const double score = has_valid ? e.final_valid_nll : e.final_train_nll;
    if (e.diverged || !std::isfinite(score)) continue;
    if (!summary.best) {
      summary.best = i;
      continue;
    }
    const auto& b = summary.runs[*summary.best];
    if (score < (has_valid ? b.final_valid_nll : b.final_train_nll)) summary.best = i;
  }
  summary.best_at_boundary =
      summary.best && summary.runs.size() > 1 && (*summary.best == 0 || *summary.best + 1 == summary.runs.size());
  return summary;
}

std::string GridSummary::text() const {
  std::ostringstream os;
  os << "eta,final_train_nll,final_valid_nll,diverged,log\n";
  for (const auto& e : runs) {
    os << g17(e.eta) << ',' << g17(e.final_train_nll) << ',' << g17(e.final_valid_nll) << ','
       << (e.diverged ? 1 : 0) << ',' << e.log_path << '\n';
  }
  if (!best) {
    os << "no valid step-size: every run diverged\n";
  } else {
    os << "best eta " << g17(runs[*best].eta) << " (final valid nll " << g17(runs[*best].final_valid_nll)
       << ")\n";
    if (best_at_boundary) os << "warning: best step-size lies on the grid boundary\n";
  }
  return os.str();
}

BenchReport cmd_bench(const RunConfig& cfg, const ProgressFn& progress) {
  RunConfig base = cfg;
  base.epochs = std::max<std::size_t>(cfg.epochs, 3);
  base.validate();
  if (base.bench_algos.empty()) throw ConfigError("bench: no algorithms selected");
  const DataSplit data = prepare_data(base);
  OutputModel proto = build_output_model(base);

  BenchReport report;
  for (Algo algo : base.bench_algos) {
    BenchEntry entry;
    entry.algo = algo;
    RunConfig run = base;
    run.optimizer.algo = algo;
    Rng init_rng = make_rng(base.seed, 1);
    Rng order_rng = make_rng(base.seed, 2);
    Rng step_rng = make_rng(base.seed, 3);
    Network net = build_network(run, data.train.dim(), data.train.target_dim(), init_rng);
    OutputModel model = proto;
    Optimizer opt(run.optimizer, net.layout());
    for (std::size_t epoch = 0; epoch < run.epochs && !entry.diverged; ++epoch) {
      const auto t0 = Clock::now();
      try {
        for (const auto& batch : minibatches(data.train.size(), run.batch_size, order_rng)) {
          opt.step(net, model, data.train.batch_features(batch), data.train.batch_targets(batch), step_rng);
        }
      } catch (const DivergenceError&) {
        entry.diverged = true;
      }
      entry.epoch_seconds.push_back(seconds_since(t0));
    }
    entry.median_s = median(entry.epoch_seconds);
    if (progress) {
      progress("bench: " + std::string(to_string(algo)) + " median epoch " + g17(entry.median_s) + " s" +
               (entry.diverged ? " (diverged)" : ""));
    }
    report.entries.push_back(std::move(entry));
  }
  const BenchEntry* sgd = report.find(Algo::sgd);
  const double ref = sgd ? sgd->median_s : report.entries.front().median_s;
  for (auto& e : report.entries) e.ratio = e.median_s / ref;
  return report;
}

const BenchEntry* BenchReport::find(Algo a) const {
  for (const auto& e : entries) {
    if (e.algo == a) return &e;
  }
  return nullptr;
}

std::string BenchReport::text() const {
  std::ostringstream os;
  os << "algo,median_epoch_s,ratio_to_sgd,diverged\n";
  for (const auto& e : entries) {
    os << to_string(e.algo) << ',' << g17(e.median_s) << ',' << g17(e.ratio) << ',' << (e.diverged ? 1 : 0)
       << '\n';
  }
  return os.str();
}

}  // namespace qdnn
