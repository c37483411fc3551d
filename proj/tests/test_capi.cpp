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

#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "qdnn/qdnn.h"

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / (std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(qdnn_status_name(QDNN_OK)) == "ok");
  CHECK(std::strlen(qdnn_status_name(QDNN_ERR_CONFIG)) > 0);
  CHECK(std::strlen(qdnn_version()) > 0);
}

TEST_CASE("null arguments are rejected") {
  CHECK(qdnn_config_create(nullptr) == QDNN_ERR_INVALID_ARGUMENT);
  CHECK(qdnn_train(nullptr, nullptr) == QDNN_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(qdnn_last_error()) > 0);
  CHECK(qdnn_metric_decay(nullptr, 0.5) == QDNN_ERR_INVALID_ARGUMENT);
  CHECK(qdnn_network_forward(nullptr, nullptr, 0, nullptr) == QDNN_ERR_INVALID_ARGUMENT);
  qdnn_config_destroy(nullptr);
  qdnn_report_destroy(nullptr);
  qdnn_metric_destroy(nullptr);
  qdnn_network_destroy(nullptr);
}

TEST_CASE("config errors") {
  qdnn_config* cfg = nullptr;
  REQUIRE(qdnn_config_create(&cfg) == QDNN_OK);
  CHECK(qdnn_config_set(cfg, "algo", "qdnat") == QDNN_OK);
  CHECK(qdnn_config_set(cfg, "algo", "newton") == QDNN_ERR_CONFIG);
  CHECK(std::string(qdnn_last_error()).find("newton") != std::string::npos);
  CHECK(qdnn_config_set(cfg, "colour", "red") == QDNN_ERR_CONFIG);
  CHECK(qdnn_config_load_file(cfg, "/nonexistent/run.conf") == QDNN_ERR_IO);
  const char* text = nullptr;
  REQUIRE(qdnn_config_text(cfg, &text) == QDNN_OK);
  CHECK(std::string(text).find("algo=qdnat") != std::string::npos);
  qdnn_config_destroy(cfg);
}

TEST_CASE("metric through the C interface") {
  const size_t lengths[] = {2};
  qdnn_metric* m = nullptr;
  REQUIRE(qdnn_metric_create(lengths, 1, 1, &m) == QDNN_OK);
  CHECK(qdnn_metric_dim(m) == 2);
  // Accumulate [[2, 1], [1, 3]].
  const double a[] = {1, 1}, b[] = {1, 0}, c[] = {0, 1};
  REQUIRE(qdnn_metric_rank_one_update(m, a, 2, 1.0) == QDNN_OK);
  REQUIRE(qdnn_metric_rank_one_update(m, b, 2, 1.0) == QDNN_OK);
  REQUIRE(qdnn_metric_rank_one_update(m, c, 2, 2.0) == QDNN_OK);
  const double v[] = {1, 1};
  double out[2];
  REQUIRE(qdnn_metric_solve(m, v, 2, 0.0, out) == QDNN_OK);
  CHECK(out[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(qdnn_metric_solve(m, v, 3, 0.0, out) == QDNN_ERR_STRUCTURE);
  REQUIRE(qdnn_metric_decay(m, 1.0) == QDNN_OK);
  CHECK(qdnn_metric_solve(m, v, 2, 0.0, out) == QDNN_ERR_NUMERIC);
  const fs::path csv = temp_file("metric.csv");
  CHECK(qdnn_metric_dump_csv(m, csv.c_str()) == QDNN_OK);
  CHECK(fs::exists(csv));
  fs::remove(csv);
  qdnn_metric_destroy(m);
}

TEST_CASE("network through the C interface") {
  const size_t sizes[] = {2, 1};
  qdnn_network* net = nullptr;
  CHECK(qdnn_network_create(sizes, 2, "softplus", "gaussian", 1, &net) == QDNN_ERR_CONFIG);
  REQUIRE(qdnn_network_create(sizes, 2, "tanh", "gaussian", 1, &net) == QDNN_OK);
  CHECK(qdnn_network_num_params(net) == 3);
  CHECK(qdnn_network_input_size(net) == 2);
  CHECK(qdnn_network_output_size(net) == 1);
  const double p[] = {0.5, 2.0, -1.0};
  REQUIRE(qdnn_network_set_params(net, p, 3) == QDNN_OK);
  CHECK(qdnn_network_set_params(net, p, 2) == QDNN_ERR_STRUCTURE);
  const double x[] = {1.0, 3.0, 0.0, 0.0};
  double y[2];
  REQUIRE(qdnn_network_forward(net, x, 2, y) == QDNN_OK);
  CHECK(y[0] == doctest::Approx(0.5 + 2.0 - 3.0));
  CHECK(y[1] == doctest::Approx(0.5));

  const fs::path path = temp_file("net.ckpt");
  REQUIRE(qdnn_network_save(net, path.c_str()) == QDNN_OK);
  qdnn_network* back = nullptr;
  REQUIRE(qdnn_network_load(path.c_str(), &back) == QDNN_OK);
  double q[3];
  REQUIRE(qdnn_network_get_params(back, q, 3) == QDNN_OK);
  CHECK(std::vector<double>(q, q + 3) == std::vector<double>(p, p + 3));
  fs::remove(path);
  CHECK(qdnn_network_load(path.c_str(), &back) == QDNN_ERR_IO);
  qdnn_network_destroy(back);
  qdnn_network_destroy(net);
}

TEST_CASE("verify through the C interface") {
  qdnn_report* rep = nullptr;
  REQUIRE(qdnn_verify("op-quadratic", &rep) == QDNN_OK);
  CHECK(qdnn_report_passed(rep) == 1);
  double v = 0;
  CHECK(qdnn_report_value(rep, "check.0", &v) == QDNN_OK);
  CHECK(qdnn_report_value(rep, "nothing", &v) == QDNN_ERR_CONFIG);
  CHECK(std::strlen(qdnn_report_text(rep)) > 0);
  qdnn_report_destroy(rep);
  rep = nullptr;
  CHECK(qdnn_verify("bogus", &rep) == QDNN_ERR_CONFIG);
  CHECK(rep == nullptr);
}

namespace {
void count_lines(const char*, void* user) { ++*static_cast<int*>(user); }
}  // namespace

TEST_CASE("train through the C interface") {
  qdnn_config* cfg = nullptr;
  REQUIRE(qdnn_config_create(&cfg) == QDNN_OK);
  const fs::path log = temp_file("train.csv");
  REQUIRE(qdnn_config_set(cfg, "arch", "784,10,10") == QDNN_OK);
  REQUIRE(qdnn_config_set(cfg, "train-limit", "200") == QDNN_OK);
  REQUIRE(qdnn_config_set(cfg, "epochs", "1") == QDNN_OK);
  REQUIRE(qdnn_config_set(cfg, "log", log.c_str()) == QDNN_OK);
  int lines = 0;
  REQUIRE(qdnn_config_set_log_callback(cfg, count_lines, &lines) == QDNN_OK);
  qdnn_report* rep = nullptr;
  REQUIRE(qdnn_train(cfg, &rep) == QDNN_OK);
  double epochs = 0, nll = 0;
  CHECK(qdnn_report_value(rep, "epochs", &epochs) == QDNN_OK);
  CHECK(epochs == 1.0);
  CHECK(qdnn_report_value(rep, "final_train_nll", &nll) == QDNN_OK);
  CHECK(std::isfinite(nll));
  CHECK(lines >= 1);
  CHECK(fs::exists(log));
  fs::remove(log);
  qdnn_report_destroy(rep);
  qdnn_config_destroy(cfg);
}
