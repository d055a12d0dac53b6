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
#include <optional>
#include <vector>

#include "loratwin/adapter_cache.hpp"
#include "loratwin/kv_scheduler.hpp"
#include "loratwin/server_config.hpp"
#include "loratwin/workload.hpp"

namespace loratwin {

struct SimOptions {
  // Assert ledger conservation and lifecycle validity every iteration.
  bool check_invariants = false;
  // Keep a per-iteration trace row (time, batch sizes, lat_step, loads).
  bool record_iteration_trace = false;
  std::optional<std::int64_t> iteration_cap_override;
};

struct IterationTraceRow {
  double time_s = 0.0;
  std::int64_t iteration = 0;
  int r_running = 0;
  int r_waiting = 0;
  int a_running = 0;
  double lat_step_s = 0.0;
  int loads = 0;
};

struct SimulationResult {
  // Final per-request states, indexed by request_id.
  std::vector<RequestState> requests;
  std::vector<LoadEvent> load_events;

  std::int64_t iterations = 0;
  double final_clock_s = 0.0;   // last event time (drain end)
  double duration_s = 0.0;      // arrival window echo
  bool truncated = false;       // hit the iteration cap
  double wall_time_s = 0.0;     // host time spent simulating

  // Config echo for downstream readers.
  int slots = 0;
  int served_adapters = 0;
  std::int64_t kv_capacity_tokens = 0;

  std::vector<IterationTraceRow> iteration_trace;  // only if requested
};

// Runs the continuous-batching loop over a generated arrival stream.
// `mode` selects Full or Mean length sampling (Mean may always be derived
// from a Full spec; the reverse is an error). Deterministic given
// (workload.seed, config).
SimulationResult run_simulation(const WorkloadSpec& workload, const ServerConfig& config,
                                LengthMode mode, const SimOptions& options = {});

// Same loop over an explicit, pre-built request list — used by replay-style
// tests and oracle fixtures. `adapters` supplies ranks; `duration_s` is the
// arrival window used for metrics.
SimulationResult run_scripted(const std::vector<Request>& requests,
                              const std::vector<AdapterSpec>& adapters, double duration_s,
                              const ServerConfig& config, const SimOptions& options = {});

}  // namespace loratwin
