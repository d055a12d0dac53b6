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

#include <cstdint>

#include "loratwin/estimators.hpp"

namespace loratwin {

// Server-side knobs of the simulated deployment: slot count, latency /
// memory / load estimators, and scheduling policy flags.
struct ServerConfig {
  int slots = 1;  // G, fixed at startup

  LatencyCoefficients latency;
  MemoryModel memory;
  LoadLatencyTable load;

  // vLLM admits requests of already-loaded adapters ahead of slot-blocked
  // earlier arrivals; turning this off approximates dynamic-slot servers.
  bool loaded_adapter_priority = true;

  std::int64_t iteration_cap = 100'000'000;

  // Count prompt tokens in ideal throughput (default: output tokens only).
  bool ideal_includes_input = false;

  void validate() const;
};

// Synthetic coefficient preset for a single-GPU, H100-class deployment.
// The numbers are calibrated so placement sweeps show the documented
// two-region behavior; they are not measurements.
ServerConfig h100_like_config(int slots);

}  // namespace loratwin
