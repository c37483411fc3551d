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

#ifndef QDNN_CORE_VERIFY_HPP
#define QDNN_CORE_VERIFY_HPP

#include <string>
#include <string_view>
#include <vector>

namespace qdnn {

struct VerifyCheck {
  std::string name;
  double value = 0.0;      // measured quantity
  double threshold = 0.0;  // bound it is compared against
  bool passed = false;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;
  bool passed() const;
  std::string text() const;
};

// Suites: gradcheck, qdsolve-oracle, fisher-consistency, invariance,
// op-quadratic. Each uses fixed fixtures and seeds.
VerifyReport cmd_verify(std::string_view suite);
const std::vector<std::string_view>& verify_suites();

}  // namespace qdnn

#endif  // QDNN_CORE_VERIFY_HPP
