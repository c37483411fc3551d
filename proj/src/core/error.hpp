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

#ifndef QDNN_CORE_ERROR_HPP
#define QDNN_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qdnn {

// Base of every error thrown by the core. The C API maps each subclass to a
// distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes, layouts or traces that do not fit together.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Division by zero in a solve, non-finite inputs to a numeric routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A training step produced a non-finite loss or direction. Carries the
// step-size so grid search can record which run blew up.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double eta)
      : Error(what), eta_(eta) {}
  double eta() const { return eta_; }

 private:
  double eta_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qdnn

#endif  // QDNN_CORE_ERROR_HPP
