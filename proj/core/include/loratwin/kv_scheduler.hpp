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
#include <deque>
#include <optional>
#include <vector>

#include "loratwin/adapter_cache.hpp"
#include "loratwin/workload.hpp"

namespace loratwin {

enum class Phase { Waiting, Running, Preempted, Finished, Rejected };

struct RequestState {
  Request request;
  int adapter_rank = 0;  // resolved from the workload's adapter specs
  Phase phase = Phase::Waiting;
  int tokens_generated = 0;
  std::int64_t kv_tokens_held = 0;
  std::optional<double> first_token_time_s;
  std::vector<double> token_emit_times_s;
  double completion_time_s = 0.0;  // meaningful once Finished
  int preemption_count = 0;
  std::int64_t admission_seq = -1;  // recency key for LIFO preemption
};

// Token-granular KV accounting against the mem_max capacity.
struct KvLedger {
  std::int64_t capacity_tokens = 0;
  std::int64_t used_tokens = 0;

  bool can_hold(std::int64_t extra) const { return used_tokens + extra <= capacity_tokens; }
  void reserve(std::int64_t tokens);
  void release(std::int64_t tokens);
};

// Queues + batch + ledger. Requests are referenced by index into the
// engine-owned request array; the two waiting queues realize the rule that
// preempted requests re-queue at the front, ordered by original arrival.
struct SchedulerState {
  KvLedger ledger;
  std::vector<std::int32_t> running;  // admission order
  std::deque<std::int32_t> waiting_preempted;
  std::deque<std::int32_t> waiting_fresh;
  std::int64_t next_admission_seq = 0;

  int r_waiting() const {
    return static_cast<int>(waiting_preempted.size() + waiting_fresh.size());
  }
};

struct AdmitOutcome {
  std::vector<std::int32_t> admitted;
  std::vector<std::int32_t> rejected_oversized;
  bool stopped_on_memory = false;
};

// One FCFS scan over the waiting queues. A slot-blocked request is skipped
// (later requests of loaded adapters may overtake it) when
// loaded_adapter_priority is set, and blocks the scan otherwise; the first
// memory-blocked request always stops the scan. Admission reserves
// input + tokens_generated + 1 KV tokens (recompute semantics for
// re-admitted preempted requests). Requests that can never fit are
// rejected in place. Slot feasibility is planned against `cache` without
// mutating it; the engine applies the plan via ensure_loaded afterwards.
AdmitOutcome admit(SchedulerState& state, std::vector<RequestState>& requests,
                   const SlotCache& cache, bool loaded_adapter_priority);

// Reserves the +1 next-token KV slot for every running request, preempting
// the most recently admitted requests (LIFO, recompute) until the demand
// fits. A sole running request is never preempted: if its reservation
// cannot fit and this step does not finish it, SimulationError is raised.
// Returns the preempted request indices (already re-queued).
std::vector<std::int32_t> decode_step_alloc(SchedulerState& state,
                                            std::vector<RequestState>& requests);

// Moves requests that have emitted all their tokens out of the batch and
// releases their KV. `now` is the current clock, used only for sanity
// checks; completion times are recorded at emission.
std::vector<std::int32_t> complete_finished(SchedulerState& state,
                                            std::vector<RequestState>& requests, double now);

// Ledger conservation + lifecycle sanity; throws InternalError on
// violation. Called per-iteration by the engine in checked mode.
void check_scheduler_invariants(const SchedulerState& state,
                                const std::vector<RequestState>& requests);

}  // namespace loratwin
