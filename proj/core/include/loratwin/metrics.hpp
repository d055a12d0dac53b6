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
#include <string>
#include <vector>

#include "loratwin/engine.hpp"
#include "loratwin/workload.hpp"

namespace loratwin {

struct MetricsSummary {
  double throughput_tok_s = 0.0;  // output tokens / s over the arrival window
  double itl_mean_s = 0.0;
  double itl_p50_s = 0.0;
  double itl_p99_s = 0.0;
  double ttft_mean_s = 0.0;
  double ttft_p50_s = 0.0;
  double ttft_p99_s = 0.0;
  double ideal_throughput_tok_s = 0.0;
  bool starved = false;  // throughput < 0.9 * ideal
  std::int64_t finished_count = 0;
  std::int64_t rejected_count = 0;
  bool degenerate = false;  // empty result; starved is not meaningful
};

// Demand rate implied by the workload: sum of rate * mean output tokens
// (optionally + mean input tokens). Full-mode lengths use their empirical
// means.
double ideal_throughput(const WorkloadSpec& workload, bool include_input = false);

// TTFT/ITL/throughput over the arrival window, plus the starvation verdict
// against ideal throughput (reduced by the demand of rejected requests).
MetricsSummary compute_metrics(const SimulationResult& result, const WorkloadSpec& workload,
                               bool ideal_includes_input = false);

// Nearest-rank percentile: the element at 1-based index ceil(p/100 * n) of
// the sorted sample. Deterministic, no interpolation. Empty input -> 0.
double percentile_nearest_rank(std::vector<double> values, double pct);

// Mean over pairs of 100*|p-a| / ((|p|+|a|)/2); a pair of two zeros
// contributes 0. Lengths must match and be nonzero.
double smape(const std::vector<double>& predicted, const std::vector<double>& actual);

// One comparable scenario: the three headline metrics under some key
// (typically a workload/config name shared between a twin run and a real
// serving trace).
struct ScenarioMetrics {
  std::string key;
  double throughput_tok_s = 0.0;
  double itl_mean_s = 0.0;
  double ttft_mean_s = 0.0;
};

struct CompareReport {
  double throughput_smape_pct = 0.0;
  double itl_smape_pct = 0.0;
  double ttft_smape_pct = 0.0;
  std::vector<std::string> matched_keys;
  std::vector<std::string> unmatched_keys;  // present on one side only
};

// Per-metric SMAPE across scenarios matched by key. Unmatched keys are
// reported but, if no keys match at all, ValidationError is raised.
CompareReport compare_traces(const std::vector<ScenarioMetrics>& dt,
                             const std::vector<ScenarioMetrics>& real);

// An externally measured request, as ingested from real serving logs.
struct TraceRequest {
  int adapter_id = 0;
  double arrival_s = 0.0;
  std::vector<double> token_times_s;
};

// Reduces a measured trace to the three headline metrics over [0, window].
ScenarioMetrics reduce_trace(const std::vector<TraceRequest>& requests, double window_s,
                             const std::string& key);

}  // namespace loratwin
