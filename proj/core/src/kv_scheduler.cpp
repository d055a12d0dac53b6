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

#include "loratwin/kv_scheduler.hpp"

#include <algorithm>
#include <unordered_set>

#include "loratwin/errors.hpp"

namespace loratwin {

void KvLedger::reserve(std::int64_t tokens) {
  if (tokens < 0)
    throw InternalError("KvLedger: negative reservation of " + std::to_string(tokens));
  if (!can_hold(tokens))
    throw InternalError("KvLedger: reserving " + std::to_string(tokens) + " over capacity (" +
                        std::to_string(used_tokens) + "/" + std::to_string(capacity_tokens) + ")");
  used_tokens += tokens;
}

void KvLedger::release(std::int64_t tokens) {
  if (tokens < 0)
    throw InternalError("KvLedger: negative release of " + std::to_string(tokens));
  if (tokens > used_tokens)
    throw InternalError("KvLedger: releasing " + std::to_string(tokens) + " with only " +
                        std::to_string(used_tokens) + " used");
  used_tokens -= tokens;
}

namespace {

// Slot bookkeeping for one admission scan: a read-only view of the cache
// plus the slots claimed by running and just-admitted requests. Mirrors the
// eviction choices ensure_loaded will make, so a feasibility "yes" here is
// never contradicted later.
class SlotPlan {
 public:
  SlotPlan(const SlotCache& cache, const std::vector<std::int32_t>& running,
           const std::vector<RequestState>& requests, int slots)
      : free_slots_(slots - cache.resident_count()) {
    for (std::int32_t idx : running) {
      const RequestState& r = requests[idx];
      if (r.adapter_rank > 0) claimed_.insert(r.request.adapter_id);
    }
    // LRU-ordered pool of residents nobody in the batch is using.
    for (const auto& [id, last_used] : cache.residents()) {
      if (!claimed_.count(id)) idle_pool_.emplace_back(last_used, id);
    }
    std::sort(idle_pool_.begin(), idle_pool_.end());
  }

  bool can_claim(int adapter_id) const {
    if (claimed_.count(adapter_id)) return true;
    if (is_virtually_resident(adapter_id)) return true;
    return free_slots_ > 0 || !idle_pool_.empty();
  }

  void claim(int adapter_id) {
    if (claimed_.count(adapter_id)) return;
    if (is_virtually_resident(adapter_id)) {
      // Its slot is no longer idle; drop it from the eviction pool.
      idle_pool_.erase(std::remove_if(idle_pool_.begin(), idle_pool_.end(),
                                      [&](const auto& e) { return e.second == adapter_id; }),
                       idle_pool_.end());
    } else if (free_slots_ > 0) {
      --free_slots_;
    } else {
      evicted_.insert(idle_pool_.front().second);  // same victim ensure_loaded will pick
      idle_pool_.erase(idle_pool_.begin());
    }
    claimed_.insert(adapter_id);
  }

 private:
  bool is_virtually_resident(int adapter_id) const {
    if (evicted_.count(adapter_id)) return false;
    return std::any_of(idle_pool_.begin(), idle_pool_.end(),
                       [&](const auto& e) { return e.second == adapter_id; });
  }

  int free_slots_;
  std::unordered_set<int> claimed_;
  std::unordered_set<int> evicted_;
  std::vector<std::pair<double, int>> idle_pool_;  // (last_used, adapter_id)
};

std::int64_t admission_demand(const RequestState& r) {
  // Recompute semantics: a re-admitted request's prefill covers the prompt
  // plus everything it had generated, and we reserve the next token too.
  return static_cast<std::int64_t>(r.request.input_tokens) + r.tokens_generated + 1;
}

// Scans one waiting queue in place. Returns false if the scan stopped (a
// memory-blocked request, or any blocked request without the priority
// policy); admitted/rejected entries are removed from the queue.
bool scan_queue(std::deque<std::int32_t>& queue, SchedulerState& state,
                std::vector<RequestState>& requests, SlotPlan& plan,
                bool loaded_adapter_priority, AdmitOutcome& out,
                std::unordered_set<int>& blocked_adapters) {
  std::size_t read = 0, write = 0;
  bool keep_scanning = true;
  for (; read < queue.size(); ++read) {
    const std::int32_t idx = queue[read];
    RequestState& r = requests[idx];

    const std::int64_t demand = admission_demand(r);
    if (demand > state.ledger.capacity_tokens) {
      r.phase = Phase::Rejected;  // can never fit, even in an empty batch
      out.rejected_oversized.push_back(idx);
      continue;
    }

    const bool needs_slot = r.adapter_rank > 0;
    if (needs_slot && blocked_adapters.count(r.request.adapter_id)) {
      queue[write++] = idx;  // known slot-blocked this scan
      if (!loaded_adapter_priority) {
        keep_scanning = false;
        ++read;
        break;
      }
      continue;
    }
    if (needs_slot && !plan.can_claim(r.request.adapter_id)) {
      blocked_adapters.insert(r.request.adapter_id);
      queue[write++] = idx;
      if (!loaded_adapter_priority) {
        keep_scanning = false;
        ++read;
        break;
      }
      continue;  // vLLM rule: later loaded-adapter requests may pass it
    }
    if (!state.ledger.can_hold(demand)) {
      queue[write++] = idx;
      out.stopped_on_memory = true;
      keep_scanning = false;  // strict FCFS on memory
      ++read;
      break;
    }

    state.ledger.reserve(demand);
    r.kv_tokens_held = demand;
    r.phase = Phase::Running;
    r.admission_seq = state.next_admission_seq++;
    if (needs_slot) plan.claim(r.request.adapter_id);
    state.running.push_back(idx);
    out.admitted.push_back(idx);
  }
  // Close the compaction gap left by admitted/rejected entries.
  for (; read < queue.size(); ++read) queue[write++] = queue[read];
  queue.resize(write);
  return keep_scanning;
}

}  // namespace

AdmitOutcome admit(SchedulerState& state, std::vector<RequestState>& requests,
                   const SlotCache& cache, bool loaded_adapter_priority) {
  AdmitOutcome out;
  SlotPlan plan(cache, state.running, requests, cache.capacity());
  std::unordered_set<int> blocked_adapters;
  if (scan_queue(state.waiting_preempted, state, requests, plan, loaded_adapter_priority, out,
                 blocked_adapters)) {
    scan_queue(state.waiting_fresh, state, requests, plan, loaded_adapter_priority, out,
               blocked_adapters);
  }
  return out;
}

std::vector<std::int32_t> decode_step_alloc(SchedulerState& state,
                                            std::vector<RequestState>& requests) {
  std::vector<std::int32_t> preempted;
  if (state.running.empty()) return preempted;

  // Every running request wants one more token; shed the most recently
  // admitted requests until the demand fits.
  auto demand = static_cast<std::int64_t>(state.running.size());
  while (!state.ledger.can_hold(demand) && state.running.size() > 1) {
    std::size_t victim_pos = 0;
    for (std::size_t i = 1; i < state.running.size(); ++i) {
      if (requests[state.running[i]].admission_seq >
          requests[state.running[victim_pos]].admission_seq)
        victim_pos = i;
    }
    const std::int32_t victim = state.running[victim_pos];
    RequestState& r = requests[victim];
    state.ledger.release(r.kv_tokens_held);
    r.kv_tokens_held = 0;
    r.phase = Phase::Preempted;
    ++r.preemption_count;
    state.running.erase(state.running.begin() + static_cast<std::ptrdiff_t>(victim_pos));
    // Re-queue at the front block, ordered by original arrival.
    auto pos = std::lower_bound(
        state.waiting_preempted.begin(), state.waiting_preempted.end(), victim,
        [&](std::int32_t a, std::int32_t b) {
          const Request& ra = requests[a].request;
          const Request& rb = requests[b].request;
          if (ra.arrival_time_s != rb.arrival_time_s)
            return ra.arrival_time_s < rb.arrival_time_s;
          return ra.request_id < rb.request_id;
        });
    state.waiting_preempted.insert(pos, victim);
    preempted.push_back(victim);
    --demand;
  }

  if (!state.ledger.can_hold(demand)) {
    // Single survivor that still does not fit. Its final token needs no new
    // reservation; anything earlier is a genuinely oversized context.
    RequestState& r = requests[state.running.front()];
    if (r.tokens_generated + 1 < r.request.output_tokens ||
        !state.ledger.can_hold(demand - 1))
      throw SimulationError("single request exceeds KV capacity: request " +
                            std::to_string(r.request.request_id));
    return preempted;
  }

  for (std::int32_t idx : state.running) {
    state.ledger.reserve(1);
    requests[idx].kv_tokens_held += 1;
  }
  return preempted;
}

std::vector<std::int32_t> complete_finished(SchedulerState& state,
                                            std::vector<RequestState>& requests, double now) {
  std::vector<std::int32_t> finished;
  std::size_t write = 0;
  for (std::size_t read = 0; read < state.running.size(); ++read) {
    const std::int32_t idx = state.running[read];
    RequestState& r = requests[idx];
    if (r.tokens_generated >= r.request.output_tokens) {
      if (r.completion_time_s > now + 1e-12)
        throw InternalError("request " + std::to_string(r.request.request_id) +
                            " completed in the future");
      state.ledger.release(r.kv_tokens_held);
      r.kv_tokens_held = 0;
      r.phase = Phase::Finished;
      finished.push_back(idx);
    } else {
      state.running[write++] = idx;
    }
  }
  state.running.resize(write);
  return finished;
}

void check_scheduler_invariants(const SchedulerState& state,
                                const std::vector<RequestState>& requests) {
  std::int64_t held = 0;
  for (std::int32_t idx : state.running) {
    const RequestState& r = requests[idx];
    if (r.phase != Phase::Running)
      throw InternalError("request " + std::to_string(r.request.request_id) +
                          " in the batch but not Running");
    if (r.tokens_generated > r.request.output_tokens)
      throw InternalError("request " + std::to_string(r.request.request_id) +
                          " generated past its output length");
    if (r.kv_tokens_held < r.request.input_tokens)
      throw InternalError("request " + std::to_string(r.request.request_id) +
                          " running without resident prefill KV");
    held += r.kv_tokens_held;
  }
  if (held != state.ledger.used_tokens)
    throw InternalError("KV ledger out of balance: holds sum to " + std::to_string(held) +
                        ", ledger says " + std::to_string(state.ledger.used_tokens));
  if (state.ledger.used_tokens > state.ledger.capacity_tokens)
    throw InternalError("KV ledger over capacity");
  for (std::int32_t idx : state.waiting_preempted) {
    if (requests[idx].phase != Phase::Preempted)
      throw InternalError("non-preempted request in the preempted queue");
  }
  for (std::int32_t idx : state.waiting_fresh) {
    if (requests[idx].phase != Phase::Waiting)
      throw InternalError("non-waiting request in the fresh queue");
  }
}

}  // namespace loratwin
