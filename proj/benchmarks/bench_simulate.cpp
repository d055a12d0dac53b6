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

#include <benchmark/benchmark.h>

#include "loratwin/engine.hpp"
#include "loratwin/metrics.hpp"
#include "loratwin/server_config.hpp"
#include "loratwin/workload.hpp"

namespace {

using namespace loratwin;

WorkloadSpec make_workload(int adapters, double aggregate_rate, double duration_s) {
  WorkloadSpec workload;
  for (int a = 1; a <= adapters; ++a)
    workload.adapters.push_back({.adapter_id = a,
                                 .rank = (a % 3 == 0) ? 16 : 8,
                                 .rate = aggregate_rate / adapters,
                                 .lengths = {}});
  workload.lengths = LengthSpec::mean(128.0, 32.0, 231.0, 64.0);
  workload.duration_s = duration_s;
  workload.seed = 42;
  return workload;
}

// One simulated minute; counters report simulated tokens per wall second.
void bm_simulate_minute(benchmark::State& state) {
  const int adapters = static_cast<int>(state.range(0));
  const int slots = static_cast<int>(state.range(1));
  const WorkloadSpec workload = make_workload(adapters, 1.0, 60.0);
  const ServerConfig config = h100_like_config(slots);

  std::int64_t tokens = 0;
  std::int64_t iterations = 0;
  for (auto _ : state) {
    const SimulationResult result = run_simulation(workload, config, LengthMode::Mean, {});
    benchmark::DoNotOptimize(result.final_clock_s);
    iterations += result.iterations;
    for (const RequestState& r : result.requests) tokens += r.tokens_generated;
  }
  state.counters["sim_iters"] =
      benchmark::Counter(static_cast<double>(iterations), benchmark::Counter::kIsRate);
  state.counters["sim_tokens"] =
      benchmark::Counter(static_cast<double>(tokens), benchmark::Counter::kIsRate);
}

// The invariant checker's overhead on the same workload.
void bm_simulate_checked(benchmark::State& state) {
  const WorkloadSpec workload = make_workload(16, 1.0, 60.0);
  const ServerConfig config = h100_like_config(4);
  SimOptions options;
  options.check_invariants = true;
  for (auto _ : state) {
    const SimulationResult result = run_simulation(workload, config, LengthMode::Mean, options);
    benchmark::DoNotOptimize(result.final_clock_s);
  }
}

void bm_metrics(benchmark::State& state) {
  const WorkloadSpec workload = make_workload(16, 4.0, 120.0);
  const SimulationResult result =
      run_simulation(workload, h100_like_config(4), LengthMode::Mean, {});
  for (auto _ : state) {
    const MetricsSummary metrics = compute_metrics(result, workload);
    benchmark::DoNotOptimize(metrics.throughput_tok_s);
  }
}

BENCHMARK(bm_simulate_minute)
    ->ArgsProduct({{4, 16, 64}, {1, 8}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bm_simulate_checked)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_metrics)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
