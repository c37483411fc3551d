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

#include "qdnn/qdnn.h"

#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/network.hpp"
#include "core/outputs.hpp"
#include "core/qdmetric.hpp"
#include "core/trainer.hpp"
#include "core/verify.hpp"

struct qdnn_config {
  qdnn::RunConfig cfg;
  qdnn_log_fn log = nullptr;
  void* user = nullptr;
  std::string text;
};

struct qdnn_report {
  std::string text;
  bool passed = false;
  std::map<std::string, double> values;
};

struct qdnn_metric {
  qdnn::QDMetric m;
};

struct qdnn_network {
  qdnn::Network net;
  qdnn::OutputModel model;
};

namespace {

thread_local std::string g_last_error;

qdnn_status fail(qdnn_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Maps the active exception onto a status code.
qdnn_status translate() {
  try {
    throw;
  } catch (const qdnn::DivergenceError& e) {
    return fail(QDNN_ERR_DIVERGED, e.what());
  } catch (const qdnn::StructuralError& e) {
    return fail(QDNN_ERR_STRUCTURE, e.what());
  } catch (const qdnn::NumericError& e) {
    return fail(QDNN_ERR_NUMERIC, e.what());
  } catch (const qdnn::IoError& e) {
    return fail(QDNN_ERR_IO, e.what());
  } catch (const qdnn::ConfigError& e) {
    return fail(QDNN_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(QDNN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QDNN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QDNN_ERR_INTERNAL, "unknown error");
  }
}

template <class F>
qdnn_status guarded(F&& f) {
  try {
    f();
    return QDNN_OK;
  } catch (...) {
    return translate();
  }
}

#define QDNN_REQUIRE(cond)                                                      \
  do {                                                                          \
    if (!(cond)) return fail(QDNN_ERR_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

qdnn::ProgressFn progress_of(const qdnn_config* c) {
  if (!c->log) return {};
  return [fn = c->log, user = c->user](const std::string& line) { fn(line.c_str(), user); };
}

}  // namespace

extern "C" {

const char* qdnn_status_name(qdnn_status s) {
  switch (s) {
    case QDNN_OK: return "ok";
    case QDNN_ERR_STRUCTURE: return "structural error";
    case QDNN_ERR_NUMERIC: return "numeric error";
    case QDNN_ERR_DIVERGED: return "diverged";
    case QDNN_ERR_IO: return "i/o error";
    case QDNN_ERR_CONFIG: return "configuration error";
    case QDNN_ERR_VERIFY_FAILED: return "verification failed";
    case QDNN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QDNN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* qdnn_last_error(void) { return g_last_error.c_str(); }

const char* qdnn_version(void) { return "0.1.0"; }

qdnn_status qdnn_config_create(qdnn_config** out) {
  QDNN_REQUIRE(out);
  return guarded([&] { *out = new qdnn_config(); });
}

void qdnn_config_destroy(qdnn_config* cfg) { delete cfg; }

qdnn_status qdnn_config_set(qdnn_config* cfg, const char* key, const char* value) {
  QDNN_REQUIRE(cfg && key && value);
  return guarded([&] { cfg->cfg.set(key, value); });
}

qdnn_status qdnn_config_load_file(qdnn_config* cfg, const char* path) {
  QDNN_REQUIRE(cfg && path);
  return guarded([&] { cfg->cfg.load_file(path); });
}

qdnn_status qdnn_config_text(qdnn_config* cfg, const char** out) {
  QDNN_REQUIRE(cfg && out);
  return guarded([&] {
    cfg->text = cfg->cfg.to_text();
    *out = cfg->text.c_str();
  });
}

qdnn_status qdnn_config_set_log_callback(qdnn_config* cfg, qdnn_log_fn fn, void* user) {
  QDNN_REQUIRE(cfg);
  cfg->log = fn;
  cfg->user = user;
  return QDNN_OK;
}

void qdnn_report_destroy(qdnn_report* r) { delete r; }

const char* qdnn_report_text(const qdnn_report* r) { return r ? r->text.c_str() : ""; }

int qdnn_report_passed(const qdnn_report* r) { return r && r->passed ? 1 : 0; }

qdnn_status qdnn_report_value(const qdnn_report* r, const char* key, double* out) {
  QDNN_REQUIRE(r && key && out);
  const auto it = r->values.find(key);
  if (it == r->values.end()) return fail(QDNN_ERR_CONFIG, std::string("report has no value '") + key + "'");
  *out = it->second;
  return QDNN_OK;
}

qdnn_status qdnn_train(const qdnn_config* cfg, qdnn_report** out) {
  QDNN_REQUIRE(cfg && out);
  return guarded([&] {
    auto rep = std::make_unique<qdnn_report>();
    const qdnn::TrainResult r = qdnn::cmd_train(cfg->cfg, progress_of(cfg));
    std::ostringstream os;
    os << qdnn::TrainLog::kHeader << '\n';
    for (const auto& row : r.log.rows()) os << qdnn::TrainLog::format_row(row) << '\n';
    if (r.diverged) os << "diverged: " << r.divergence_reason << '\n';
    rep->text = os.str();
    rep->passed = !r.diverged;
    rep->values["epochs"] = static_cast<double>(r.log.rows().size());
    rep->values["diverged"] = r.diverged ? 1.0 : 0.0;
    rep->values["initial_train_nll"] = r.initial_train.nll;
    rep->values["initial_valid_nll"] = r.initial_valid.nll;
    if (!r.log.empty()) {
      const auto& last = r.log.rows().back();
      rep->values["final_train_nll"] = last.train_nll;
      rep->values["final_train_err"] = last.train_err;
      rep->values["final_valid_nll"] = last.valid_nll;
      rep->values["final_valid_err"] = last.valid_err;
    }
    *out = rep.release();
  });
}

qdnn_status qdnn_grid(const qdnn_config* cfg, qdnn_report** out) {
  QDNN_REQUIRE(cfg && out);
  return guarded([&] {
    auto rep = std::make_unique<qdnn_report>();
    const qdnn::GridSummary g = qdnn::cmd_grid(cfg->cfg, cfg->cfg.lr_grid, progress_of(cfg));
    rep->text = g.text();
    rep->passed = g.best.has_value();
    if (g.best) rep->values["best_eta"] = g.runs[*g.best].eta;
    rep->values["best_at_boundary"] = g.best_at_boundary ? 1.0 : 0.0;
    for (const auto& e : g.runs) {
      std::ostringstream k;
      k << e.eta;
      rep->values["final_valid_nll." + k.str()] = e.final_valid_nll;
      rep->values["final_train_nll." + k.str()] = e.final_train_nll;
      rep->values["diverged." + k.str()] = e.diverged ? 1.0 : 0.0;
    }
    *out = rep.release();
  });
}

qdnn_status qdnn_bench(const qdnn_config* cfg, qdnn_report** out) {
  QDNN_REQUIRE(cfg && out);
  return guarded([&] {
    auto rep = std::make_unique<qdnn_report>();
    const qdnn::BenchReport b = qdnn::cmd_bench(cfg->cfg, progress_of(cfg));
    rep->text = b.text();
    rep->passed = true;
    for (const auto& e : b.entries) {
      const std::string name(qdnn::to_string(e.algo));
      rep->values["median_s." + name] = e.median_s;
      rep->values["ratio." + name] = e.ratio;
      if (e.diverged) rep->passed = false;
    }
    *out = rep.release();
  });
}

qdnn_status qdnn_verify(const char* suite, qdnn_report** out) {
  QDNN_REQUIRE(suite && out);
  bool ok = false;
  const qdnn_status s = guarded([&] {
    auto rep = std::make_unique<qdnn_report>();
    const qdnn::VerifyReport v = qdnn::cmd_verify(suite);
    rep->text = v.text();
    rep->passed = v.passed();
    for (std::size_t i = 0; i < v.checks.size(); ++i) rep->values["check." + std::to_string(i)] = v.checks[i].value;
    ok = rep->passed;
    *out = rep.release();
  });
  if (s != QDNN_OK) return s;
  return ok ? QDNN_OK : fail(QDNN_ERR_VERIFY_FAILED, std::string("verify suite '") + suite + "' failed");
}

qdnn_status qdnn_metric_create(const size_t* block_lengths, size_t num_blocks, int quasi_diagonal,
                               qdnn_metric** out) {
  QDNN_REQUIRE(out && (block_lengths || num_blocks == 0));
  return guarded([&] {
    const auto layout = qdnn::BlockLayout::from_lengths({block_lengths, num_blocks});
    const auto mode = quasi_diagonal ? qdnn::MetricMode::quasi_diagonal : qdnn::MetricMode::diagonal;
    *out = new qdnn_metric{qdnn::QDMetric(layout, mode)};
  });
}

void qdnn_metric_destroy(qdnn_metric* m) { delete m; }

size_t qdnn_metric_dim(const qdnn_metric* m) { return m ? m->m.dim() : 0; }

qdnn_status qdnn_metric_rank_one_update(qdnn_metric* m, const double* v, size_t n, double alpha) {
  QDNN_REQUIRE(m && (v || n == 0));
  return guarded([&] { m->m.rank_one_update({v, n}, alpha); });
}

qdnn_status qdnn_metric_decay(qdnn_metric* m, double gamma) {
  QDNN_REQUIRE(m);
  return guarded([&] { m->m.decay(gamma); });
}

qdnn_status qdnn_metric_solve(const qdnn_metric* m, const double* v, size_t n, double epsilon,
                              double* out) {
  QDNN_REQUIRE(m && out && (v || n == 0));
  return guarded([&] {
    if (n != m->m.dim()) throw qdnn::StructuralError("metric solve: vector length does not match the metric");
    m->m.solve_into({v, n}, epsilon, {out, n});
  });
}

qdnn_status qdnn_metric_dump_csv(const qdnn_metric* m, const char* path) {
  QDNN_REQUIRE(m && path);
  return guarded([&] {
    std::ofstream os(path);
    if (!os) throw qdnn::IoError(std::string("cannot write ") + path);
    m->m.write_csv(os);
  });
}

qdnn_status qdnn_network_create(const size_t* sizes, size_t num_layers, const char* activation,
                                const char* output, unsigned long long seed, qdnn_network** out) {
  QDNN_REQUIRE(sizes && activation && output && out);
  return guarded([&] {
    if (num_layers < 2) throw qdnn::StructuralError("network needs at least an input and an output layer");
    std::vector<std::size_t> s(sizes, sizes + num_layers);
    auto h = std::make_unique<qdnn_network>();
    h->model = qdnn::OutputModel::parse(output, s.back());
    h->net = qdnn::Network(s, qdnn::parse_activation(activation));
    qdnn::Rng rng = qdnn::make_rng(seed, 1);
    h->net.init_params(rng);
    *out = h.release();
  });
}

qdnn_status qdnn_network_load(const char* path, qdnn_network** out) {
  QDNN_REQUIRE(path && out);
  return guarded([&] {
    qdnn::Checkpoint c = qdnn::load_checkpoint(path);
    *out = new qdnn_network{std::move(c.net), std::move(c.model)};
  });
}

qdnn_status qdnn_network_save(const qdnn_network* net, const char* path) {
  QDNN_REQUIRE(net && path);
  return guarded([&] { qdnn::save_checkpoint(path, net->net, net->model); });
}

void qdnn_network_destroy(qdnn_network* net) { delete net; }

size_t qdnn_network_num_params(const qdnn_network* net) { return net ? net->net.num_params() : 0; }
size_t qdnn_network_input_size(const qdnn_network* net) { return net ? net->net.input_size() : 0; }
size_t qdnn_network_output_size(const qdnn_network* net) { return net ? net->net.output_size() : 0; }

qdnn_status qdnn_network_get_params(const qdnn_network* net, double* out, size_t n) {
  QDNN_REQUIRE(net && out);
  if (n != net->net.num_params()) return fail(QDNN_ERR_STRUCTURE, "parameter count mismatch");
  std::copy(net->net.params().begin(), net->net.params().end(), out);
  return QDNN_OK;
}

qdnn_status qdnn_network_set_params(qdnn_network* net, const double* p, size_t n) {
  QDNN_REQUIRE(net && p);
  return guarded([&] { net->net.set_params({p, n}); });
}

qdnn_status qdnn_network_forward(const qdnn_network* net, const double* x, size_t batch, double* out) {
  QDNN_REQUIRE(net && out && (x || batch == 0 || net->net.input_size() == 0));
  return guarded([&] {
    const auto in = static_cast<Eigen::Index>(net->net.input_size());
    const auto b = static_cast<Eigen::Index>(batch);
    qdnn::Matrix xm = in > 0 ? qdnn::Matrix(Eigen::Map<const qdnn::Matrix>(x, in, b)) : qdnn::Matrix(0, b);
    const qdnn::Matrix y = net->net.predict(xm);
    std::copy(y.data(), y.data() + y.size(), out);
  });
}

}  // extern "C"
