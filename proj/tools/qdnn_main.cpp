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

// Command-line front end. Talks to the library through the C interface only.

#include <qdnn/qdnn.h>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

struct Handles {
  std::unique_ptr<qdnn_config, decltype(&qdnn_config_destroy)> cfg{nullptr, qdnn_config_destroy};
};

using Report = std::unique_ptr<qdnn_report, decltype(&qdnn_report_destroy)>;

// Values given on the command line, keyed by config key.
struct Overrides {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool invert = false;
  bool csv_header = false;
};

void add_run_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_file, "key=value file; flags override its entries")->check(CLI::ExistingFile);
  struct Spec {
    const char* key;
    const char* help;
  };
  static const Spec specs[] = {
      {"dataset", "mnist | csv | synthetic-eeg"},
      {"data-dir", "directory with the IDX files (optionally .gz)"},
      {"csv", "CSV file for --dataset csv"},
      {"csv-targets", "trailing CSV columns used as targets (0: reconstruct inputs)"},
      {"task", "classify | autoencode (mnist)"},
      {"train-limit", "keep only the first N samples"},
      {"valid-count", "validation samples taken from the end, or 'auto'"},
      {"eeg-samples", "synthetic-eeg sample count"},
      {"eeg-channels", "synthetic-eeg channel count"},
      {"eeg-sources", "synthetic-eeg latent sources"},
      {"eeg-noise", "synthetic-eeg noise level"},
      {"arch", "layer sizes, e.g. 784,100,10"},
      {"activation", "sigmoid | tanh | relu"},
      {"output", "categorical | gaussian | gaussian-learned | bernoulli"},
      {"sparsity", "incoming connections per hidden unit (FAN_IN)"},
      {"algo", "sgd | adagrad | dop | qdop | dmcnat | qdmcnat | dnat | qdnat"},
      {"lr", "step-size"},
      {"lr-grid", "comma-separated step-sizes for grid"},
      {"gamma", "metric update rate in (0,1]"},
      {"epsilon", "metric regularization"},
      {"nmc", "pseudo-targets per sample"},
      {"epochs", "passes over the training set"},
      {"batch-size", "minibatch size"},
      {"warmup", "samples used to initialize the metric"},
      {"algos", "comma-separated algorithms for bench"},
      {"seed", "random seed"},
      {"log", "CSV log path"},
      {"checkpoint", "write the trained model here"},
  };
  for (const auto& s : specs) {
    app->add_option_function<std::string>(
        std::string("--") + s.key, [&o, key = std::string(s.key)](const std::string& v) { o.values[key] = v; },
        s.help);
  }
  app->add_flag_function(
      "--dropout{0.5}",
      [&o, app](std::int64_t) { o.values["dropout"] = app->get_option("--dropout")->as<std::string>(); },
      "hidden-layer dropout rate; --dropout=P sets P");
  app->add_flag("--invert-inputs", o.invert, "feed 1 - x instead of x");
  app->add_flag("--csv-header", o.csv_header, "the CSV file starts with a header line");
}

int report_error(qdnn_status s) {
  std::fprintf(stderr, "error (%s): %s\n", qdnn_status_name(s), qdnn_last_error());
  switch (s) {
    case QDNN_ERR_CONFIG:
    case QDNN_ERR_INVALID_ARGUMENT:
    case QDNN_ERR_IO:
      return 2;
    default:
      return 1;
  }
}

qdnn_status build_config(const Overrides& o, Handles& h) {
  qdnn_config* raw = nullptr;
  qdnn_status s = qdnn_config_create(&raw);
  if (s != QDNN_OK) return s;
  h.cfg.reset(raw);
  if (!o.config_file.empty() && (s = qdnn_config_load_file(raw, o.config_file.c_str())) != QDNN_OK) return s;
  for (const auto& [key, value] : o.values) {
    if ((s = qdnn_config_set(raw, key.c_str(), value.c_str())) != QDNN_OK) return s;
  }
  if (o.invert && (s = qdnn_config_set(raw, "invert-inputs", "true")) != QDNN_OK) return s;
  if (o.csv_header && (s = qdnn_config_set(raw, "csv-header", "true")) != QDNN_OK) return s;
  qdnn_config_set_log_callback(
      raw, [](const char* line, void*) { std::fprintf(stderr, "%s\n", line); }, nullptr);
  return QDNN_OK;
}

using Command = qdnn_status (*)(const qdnn_config*, qdnn_report**);

int run_command(Command cmd, const Overrides& o) {
  Handles h;
  qdnn_status s = build_config(o, h);
  if (s != QDNN_OK) return report_error(s);
  qdnn_report* raw = nullptr;
  s = cmd(h.cfg.get(), &raw);
  Report rep(raw, qdnn_report_destroy);
  if (s != QDNN_OK) return report_error(s);
  std::fputs(qdnn_report_text(rep.get()), stdout);
  return qdnn_report_passed(rep.get()) ? 0 : 1;
}

int run_verify(const std::vector<std::string>& suites) {
  static const char* all[] = {"gradcheck", "qdsolve-oracle", "fisher-consistency", "invariance", "op-quadratic"};
  std::vector<std::string> todo = suites;
  if (todo.empty() || (todo.size() == 1 && todo[0] == "all")) todo.assign(std::begin(all), std::end(all));
  int code = 0;
  for (const auto& suite : todo) {
    qdnn_report* raw = nullptr;
    const qdnn_status s = qdnn_verify(suite.c_str(), &raw);
    Report rep(raw, qdnn_report_destroy);
    if (rep) std::fputs(qdnn_report_text(rep.get()), stdout);
    if (s == QDNN_ERR_VERIFY_FAILED) {
      code = 1;
    } else if (s != QDNN_OK) {
      code = std::max(code, report_error(s));
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-diagonal Riemannian gradient descent for neural networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qdnn_version());

  Overrides train_o, grid_o, bench_o;
  auto* train = app.add_subcommand("train", "train one network and log per-epoch metrics");
  add_run_options(train, train_o);
  auto* grid = app.add_subcommand("grid", "train once per step-size in --lr-grid and pick the best");
  add_run_options(grid, grid_o);
  auto* bench = app.add_subcommand("bench", "median per-epoch time of each algorithm relative to sgd");
  add_run_options(bench, bench_o);
  std::vector<std::string> suites;
  auto* verify = app.add_subcommand("verify", "run built-in numerical checks");
  verify->add_option("suite", suites,
                     "gradcheck | qdsolve-oracle | fisher-consistency | invariance | op-quadratic | all");

  CLI11_PARSE(app, argc, argv);

  if (*train) return run_command(qdnn_train, train_o);
  if (*grid) return run_command(qdnn_grid, grid_o);
  if (*bench) return run_command(qdnn_bench, bench_o);
  return run_verify(suites);
}
