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

/* C interface to the qdnn training library.
 *
 * Every object is an opaque handle. Functions return a qdnn_status; on
 * failure qdnn_last_error() describes the problem for the calling thread.
 * Strings returned by the library stay valid until the owning handle is
 * destroyed (or, for qdnn_last_error, until the next failing call).
 */
#ifndef QDNN_QDNN_H
#define QDNN_QDNN_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(QDNN_BUILDING_LIBRARY)
#define QDNN_API __declspec(dllexport)
#else
#define QDNN_API __declspec(dllimport)
#endif
#else
#define QDNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qdnn_status {
  QDNN_OK = 0,
  QDNN_ERR_STRUCTURE = 1,        /* shape or layout mismatch */
  QDNN_ERR_NUMERIC = 2,          /* singular metric, invalid numeric input */
  QDNN_ERR_DIVERGED = 3,         /* non-finite loss or update */
  QDNN_ERR_IO = 4,               /* unreadable or malformed file */
  QDNN_ERR_CONFIG = 5,           /* bad option value or unknown key */
  QDNN_ERR_VERIFY_FAILED = 6,    /* a verification check did not hold */
  QDNN_ERR_INVALID_ARGUMENT = 7, /* null handle or pointer */
  QDNN_ERR_INTERNAL = 8
} qdnn_status;

QDNN_API const char* qdnn_status_name(qdnn_status s);
QDNN_API const char* qdnn_last_error(void);
QDNN_API const char* qdnn_version(void);

/* ---- run configuration ------------------------------------------------ */

typedef struct qdnn_config qdnn_config;

/* Receives one progress line per event (epoch, grid point, ...). */
typedef void (*qdnn_log_fn)(const char* line, void* user);

QDNN_API qdnn_status qdnn_config_create(qdnn_config** out);
QDNN_API void qdnn_config_destroy(qdnn_config* cfg);
/* Keys match the CLI long options without dashes, e.g. "lr", "arch". */
QDNN_API qdnn_status qdnn_config_set(qdnn_config* cfg, const char* key, const char* value);
QDNN_API qdnn_status qdnn_config_load_file(qdnn_config* cfg, const char* path);
/* key=value dump; valid until the next call on cfg. */
QDNN_API qdnn_status qdnn_config_text(qdnn_config* cfg, const char** out);
QDNN_API qdnn_status qdnn_config_set_log_callback(qdnn_config* cfg, qdnn_log_fn fn, void* user);

/* ---- commands ----------------------------------------------------------- */

typedef struct qdnn_report qdnn_report;

QDNN_API void qdnn_report_destroy(qdnn_report* r);
/* Human-readable summary. */
QDNN_API const char* qdnn_report_text(const qdnn_report* r);
/* 1 when the command met its success condition. */
QDNN_API int qdnn_report_passed(const qdnn_report* r);
/* Named scalar result, e.g. "final_train_nll", "best_eta",
 * "ratio.qdop". Returns QDNN_ERR_CONFIG for unknown keys. */
QDNN_API qdnn_status qdnn_report_value(const qdnn_report* r, const char* key, double* out);

/* Train with cfg. A diverged run still yields a report (passed = 0). */
QDNN_API qdnn_status qdnn_train(const qdnn_config* cfg, qdnn_report** out);
/* Step-size grid over the config's lr-grid. */
QDNN_API qdnn_status qdnn_grid(const qdnn_config* cfg, qdnn_report** out);
/* Per-epoch timing of the config's algos list. */
QDNN_API qdnn_status qdnn_bench(const qdnn_config* cfg, qdnn_report** out);
/* Runs one suite; returns QDNN_ERR_VERIFY_FAILED (with *out set) when a
 * check fails. */
QDNN_API qdnn_status qdnn_verify(const char* suite, qdnn_report** out);

/* ---- metric --------------------------------------------------------------- */

typedef struct qdnn_metric qdnn_metric;

/* quasi_diagonal != 0 selects quasi-diagonal storage, 0 diagonal. */
QDNN_API qdnn_status qdnn_metric_create(const size_t* block_lengths, size_t num_blocks,
                                        int quasi_diagonal, qdnn_metric** out);
QDNN_API void qdnn_metric_destroy(qdnn_metric* m);
QDNN_API size_t qdnn_metric_dim(const qdnn_metric* m);
QDNN_API qdnn_status qdnn_metric_rank_one_update(qdnn_metric* m, const double* v, size_t n,
                                                 double alpha);
QDNN_API qdnn_status qdnn_metric_decay(qdnn_metric* m, double gamma);
QDNN_API qdnn_status qdnn_metric_solve(const qdnn_metric* m, const double* v, size_t n,
                                       double epsilon, double* out);
QDNN_API qdnn_status qdnn_metric_dump_csv(const qdnn_metric* m, const char* path);

/* ---- network ----------------------------------------------------------- */

typedef struct qdnn_network qdnn_network;

/* Dense network; activation is "sigmoid", "tanh", "relu" or "identity";
 * output is an output-model name. Parameters are initialized from seed. */
QDNN_API qdnn_status qdnn_network_create(const size_t* sizes, size_t num_layers,
                                         const char* activation, const char* output,
                                         unsigned long long seed, qdnn_network** out);
QDNN_API qdnn_status qdnn_network_load(const char* path, qdnn_network** out);
QDNN_API qdnn_status qdnn_network_save(const qdnn_network* net, const char* path);
QDNN_API void qdnn_network_destroy(qdnn_network* net);
QDNN_API size_t qdnn_network_num_params(const qdnn_network* net);
QDNN_API size_t qdnn_network_input_size(const qdnn_network* net);
QDNN_API size_t qdnn_network_output_size(const qdnn_network* net);
QDNN_API qdnn_status qdnn_network_get_params(const qdnn_network* net, double* out, size_t n);
QDNN_API qdnn_status qdnn_network_set_params(qdnn_network* net, const double* p, size_t n);
/* x: batch column-major samples of input_size values each; out receives
 * batch * output_size network outputs (pre-activation of the head). */
QDNN_API qdnn_status qdnn_network_forward(const qdnn_network* net, const double* x, size_t batch,
                                          double* out);

#ifdef __cplusplus
}
#endif

#endif /* QDNN_QDNN_H */
