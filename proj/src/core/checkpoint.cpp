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

#include "core/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "core/config.hpp"
#include "core/error.hpp"

namespace qdnn {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string expect_line(std::istream& is, const char* key) {
  std::string line;
  if (!std::getline(is, line)) throw IoError(std::string("checkpoint: missing '") + key + "' line");
  const std::string prefix = std::string(key) + " ";
  if (line.rfind(prefix, 0) != 0) {
    throw IoError(std::string("checkpoint: expected '") + key + "', got '" + line + "'");
  }
  return line.substr(prefix.size());
}

}  // namespace

void write_checkpoint(std::ostream& os, const Network& net, const OutputModel& model) {
  os << "qdnn-checkpoint 1\n";
  os << "sizes ";
  for (std::size_t i = 0; i < net.sizes().size(); ++i) os << (i ? "," : "") << net.sizes()[i];
  os << "\nactivations ";
  for (std::size_t l = 0; l + 1 < net.layers().size(); ++l) {
    os << (l ? "," : "") << to_string(net.layers()[l].activation);
  }
  os << "\noutput " << model.name() << ' ' << model.dim() << '\n';
  if (model.kind() == OutputKind::gaussian) {
    os << "log_sigma ";
    for (Eigen::Index k = 0; k < model.log_sigma().size(); ++k) os << (k ? "," : "") << g17(model.log_sigma()[k]);
    os << '\n';
  }
  os << "dropout ";
  for (std::size_t l = 0; l < net.dropout().size(); ++l) os << (l ? "," : "") << g17(net.dropout()[l]);
  os << '\n';
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& c = net.layers()[l].connectivity;
    if (c.dense()) continue;
    os << "sparse " << l << ' ' << c.fan_in << '\n';
    for (std::size_t i = 0; i < c.sources.size(); ++i) os << (i ? " " : "") << c.sources[i];
    os << '\n';
  }
  os << "params " << net.num_params() << '\n';
  for (Eigen::Index i = 0; i < net.params().size(); ++i) os << g17(net.params()[i]) << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const OutputModel& model) {
  std::error_code ignored;
  std::filesystem::create_directories(path.parent_path(), ignored);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, net, model);
  if (!out) throw IoError("error while writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "qdnn-checkpoint 1") {
    throw IoError("checkpoint: unsupported header '" + line + "'");
  }
  const auto sizes = parse_size_list(expect_line(is, "sizes"));
  if (sizes.size() < 2) throw IoError("checkpoint: need at least two layer sizes");
  const std::string acts = expect_line(is, "activations");
  std::vector<Activation> hidden;
  if (!acts.empty()) {
    std::stringstream ss(acts);
    std::string a;
    while (std::getline(ss, a, ',')) hidden.push_back(parse_activation(a));
  }
  std::istringstream out_line(expect_line(is, "output"));
  std::string head;
  std::size_t dim = 0;
  out_line >> head >> dim;
  OutputModel model = OutputModel::parse(head, dim);
  std::vector<double> log_sigma;
  if (model.kind() == OutputKind::gaussian) log_sigma = parse_double_list(expect_line(is, "log_sigma"));
  const auto dropout = parse_double_list(expect_line(is, "dropout"));

  std::vector<Connectivity> conn(sizes.size() - 1);
  bool any_sparse = false;
  while (std::getline(is, line)) {
    if (line.rfind("params ", 0) == 0) break;
    if (line.rfind("sparse ", 0) != 0) throw IoError("checkpoint: unexpected line '" + line + "'");
    std::istringstream ls(line.substr(7));
    std::size_t layer = 0;
    std::size_t fan_in = 0;
    ls >> layer >> fan_in;
    if (!ls || layer >= conn.size()) throw IoError("checkpoint: bad sparse layer line");
    std::string ids;
    if (!std::getline(is, ids)) throw IoError("checkpoint: missing connection list");
    std::istringstream is_ids(ids);
    conn[layer].fan_in = fan_in;
    std::uint32_t s = 0;
    while (is_ids >> s) conn[layer].sources.push_back(s);
    any_sparse = true;
  }
  if (line.rfind("params ", 0) != 0) throw IoError("checkpoint: missing 'params' line");
  const std::size_t n = std::stoull(line.substr(7));
  Network net(sizes, hidden, any_sparse ? conn : std::vector<Connectivity>{});
  if (n != net.num_params()) throw IoError("checkpoint: parameter count does not match architecture");
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw IoError("checkpoint: truncated parameter list");
    p[i] = std::stod(line);
  }
  net.set_params(p);
  net.set_dropout(dropout);
  if (!log_sigma.empty()) {
    model.set_log_sigma(Eigen::Map<const Vector>(log_sigma.data(), static_cast<Eigen::Index>(log_sigma.size())));
  }
  return {std::move(net), std::move(model)};
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace qdnn
