/* Copyright 2026 The loratwin Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace loratwin {

// Bad user input: malformed specs, schema violations, out-of-range values.
// The message names the offending field or JSON path.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Incomplete or infeasible server configuration (missing table entries,
// zero KV capacity after slot reservation, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Least-squares fitting failures (rank-deficient design matrix).
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

// A simulation that cannot make progress (for example a single request whose
// KV footprint exceeds total capacity mid-generation).
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken internal invariant. Indicates a bug, not bad input.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace loratwin
