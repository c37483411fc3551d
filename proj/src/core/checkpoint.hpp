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

#ifndef QDNN_CORE_CHECKPOINT_HPP
#define QDNN_CORE_CHECKPOINT_HPP

#include <filesystem>
#include <iosfwd>

#include "core/network.hpp"
#include "core/outputs.hpp"

namespace qdnn {

// Text checkpoint, version 1:
//
//   qdnn-checkpoint 1
//   sizes 784,100,10
//   activations sigmoid            (one per hidden layer, comma-separated)
//   output categorical 10
//   log_sigma v1,...,vK            (gaussian heads only)
//   dropout 0,0.5
//   sparse <layer> <fan_in>        (one per sparse layer, followed by a line
//   <outputs*fan_in source ids>     of space-separated source indices)
//   params <N>
//   <N lines, one parameter each, %.17g, block order>
//
// Parameters are written in block order: per layer, per unit, bias first,
// then incoming weights (in source order for sparse layers).
struct Checkpoint {
  Network net;
  OutputModel model;
};

void write_checkpoint(std::ostream& os, const Network& net, const OutputModel& model);
void save_checkpoint(const std::filesystem::path& path, const Network& net, const OutputModel& model);
Checkpoint read_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qdnn

#endif  // QDNN_CORE_CHECKPOINT_HPP
