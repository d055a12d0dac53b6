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

#include "loratwin/engine.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <unordered_map>

#include "loratwin/errors.hpp"
#include "loratwin/estimators.hpp"

namespace loratwin {

namespace {

class Engine {
 public:
  Engine(std::vector<Request> requests, const std::vector<AdapterSpec>& adapters,
         double duration_s, const ServerConfig& config, const SimOptions& options)
      : config_(config), options_(options), cache_(config.slots), duration_s_(duration_s) {
    config.validate();
    if (adapters.empty()) throw ValidationError("workload.adapters: must be non-empty");
    if (duration_s <= 0.0) throw ValidationError("workload.duration_s: must be > 0");

    int max_rank = 0;
    for (const AdapterSpec& a : adapters) {
      adapter_rank_[a.adapter_id] = a.rank;
      max_rank = std::max(max_rank, a.rank);
    }
    if (static_cast<int>(adapter_rank_.size()) != static_cast<int>(adapters.size()))
      throw ValidationError("workload.adapters: duplicate adapter_id");
    served_adapters_ = static_cast<int>(adapters.size());

    // Slots are pre-allocated for the largest rank they may ever hold.
    const std::vector<int> profile(static_cast<std::size_t>(config.slots), max_rank);
    const std::int64_t capacity = mem_max(config.memory, config.slots, profile);
    if (capacity <= 0)
      throw ConfigError("infeasible configuration: " + std::to_string(config.slots) +
                        " slots consume the entire KV budget (mem_max = 0)");
    sched_.ledger.capacity_tokens = capacity;

    states_.reserve(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
      const Request& r = requests[i];
      if (r.request_id != static_cast<std::int64_t>(i))
        throw ValidationError("requests must be sorted with request_id = position, got id " +
                              std::to_string(r.request_id) + " at position " + std::to_string(i));
      auto rank_it = adapter_rank_.find(r.adapter_id);
      if (rank_it == adapter_rank_.end())
        throw ValidationError("request " + std::to_string(r.request_id) +
                              " references unknown adapter " + std::to_string(r.adapter_id));
      RequestState state;
      state.request = r;
      state.adapter_rank = rank_it->second;
      states_.push_back(std::move(state));
    }
  }

  SimulationResult run() {
    const auto wall_start = std::chrono::steady_clock::now();
    const std::int64_t cap = options_.iteration_cap_override.value_or(config_.iteration_cap);

    SimulationResult result;
    std::size_t ingest_pos = 0;

    while (true) {
      // Idle jump: nothing to run, nothing waiting, arrivals still to come.
      if (sched_.running.empty() && sched_.r_waiting() == 0) {
        if (ingest_pos >= states_.size()) break;  // fully drained
        clock_ = std::max(clock_, states_[ingest_pos].request.arrival_time_s);
      }

      // (1) arrivals up to the current clock join the waiting queue.
      while (ingest_pos < states_.size() &&
             states_[ingest_pos].request.arrival_time_s <= clock_) {
        sched_.waiting_fresh.push_back(static_cast<std::int32_t>(ingest_pos));
        ++ingest_pos;
      }

      // (2) retire finished requests, then allocate and admit.
      complete_finished(sched_, states_, clock_);
      decode_step_alloc(sched_, states_);
      admit(sched_, states_, cache_, config_.loaded_adapter_priority);

      if (sched_.running.empty()) {
        if (sched_.r_waiting() != 0)
          throw InternalError("empty batch with a non-empty waiting queue: admission stuck");
        continue;  // drained or jumping to the next arrival
      }

      if (options_.check_invariants) check_invariants_pre_emit();

      // (3) fetch the batch's adapters into slots.
      std::map<int, int> needed;
      for (std::int32_t idx : sched_.running) {
        const RequestState& r = states_[idx];
        if (r.adapter_rank > 0) needed.emplace(r.request.adapter_id, r.adapter_rank);
      }
      std::vector<LoadEvent> loads =
          cache_.ensure_loaded(needed, clock_, config_.load, config_.load.default_source);

      // (4) price the iteration.
      std::vector<std::pair<int, LoadSource>> load_costs;
      load_costs.reserve(loads.size());
      for (const LoadEvent& e : loads) load_costs.emplace_back(e.rank, e.source);
      const int r_running = static_cast<int>(sched_.running.size());
      const int r_waiting = sched_.r_waiting();
      const int a_running = static_cast<int>(needed.size());
      const double lat =
          lat_step(config_.latency, config_.load, r_running, r_waiting, config_.slots,
                   served_adapters_, a_running, load_costs);

      // (5) one token per running request at the iteration boundary.
      const double emit_time = clock_ + lat;
      for (std::int32_t idx : sched_.running) {
        RequestState& r = states_[idx];
        ++r.tokens_generated;
        if (!r.first_token_time_s) r.first_token_time_s = emit_time;
        r.token_emit_times_s.push_back(emit_time);
        if (r.tokens_generated == r.request.output_tokens) r.completion_time_s = emit_time;
      }

      if (options_.record_iteration_trace)
        result.iteration_trace.push_back(IterationTraceRow{
            clock_, result.iterations, r_running, r_waiting, a_running, lat,
            static_cast<int>(loads.size())});
      for (LoadEvent& e : loads) result.load_events.push_back(e);

      // (6) advance.
      clock_ = emit_time;
      ++result.iterations;
      if (result.iterations >= cap) {
        result.truncated = true;
        break;
      }
    }

    result.requests = std::move(states_);
    result.final_clock_s = clock_;
    result.duration_s = duration_s_;
    result.slots = config_.slots;
    result.served_adapters = served_adapters_;
    result.kv_capacity_tokens = sched_.ledger.capacity_tokens;
    result.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
  }

 private:
  // Valid between allocation/admission and token emission: every running
  // request holds prompt + generated + the one reserved next token. The only
  // exception is a sole request at full capacity about to emit its final
  // token, whose last reservation is waived.
  void check_invariants_pre_emit() {
    check_scheduler_invariants(sched_, states_);
    for (std::int32_t idx : sched_.running) {
      const RequestState& r = states_[idx];
      const std::int64_t expect =
          static_cast<std::int64_t>(r.request.input_tokens) + r.tokens_generated + 1;
      if (r.kv_tokens_held == expect) continue;
      const bool waived_final = sched_.running.size() == 1 &&
                                r.kv_tokens_held == expect - 1 &&
                                r.tokens_generated + 1 == r.request.output_tokens;
      if (!waived_final)
        throw InternalError("request " + std::to_string(r.request.request_id) + " holds " +
                            std::to_string(r.kv_tokens_held) + " KV tokens, expected " +
                            std::to_string(expect));
    }
  }

  const ServerConfig& config_;
  const SimOptions& options_;
  SchedulerState sched_;
  SlotCache cache_;
  std::vector<RequestState> states_;
  std::unordered_map<int, int> adapter_rank_;
  int served_adapters_ = 0;
  double clock_ = 0.0;
  double duration_s_ = 0.0;
};

}  // namespace

SimulationResult run_simulation(const WorkloadSpec& workload, const ServerConfig& config,
                                LengthMode mode, const SimOptions& options) {
  workload.validate(/*for_simulation=*/true);
  std::vector<Request> requests = generate_arrivals(workload, mode);
  Engine engine(std::move(requests), workload.adapters, workload.duration_s, config, options);
  return engine.run();
}

SimulationResult run_scripted(const std::vector<Request>& requests,
                              const std::vector<AdapterSpec>& adapters, double duration_s,
                              const ServerConfig& config, const SimOptions& options) {
  Engine engine(requests, adapters, duration_s, config, options);
  return engine.run();
}

}  // namespace loratwin
