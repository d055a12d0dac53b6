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

// JSON (de)serialization for the public types. Parsing failures raise
// ValidationError naming the JSON path of the offending field; emitted
// documents are deterministic (sorted keys, no timestamps) so identical
// runs produce byte-identical files.

#include <optional>
#include <string>
#include <vector>

#include "loratwin/engine.hpp"
#include "loratwin/metrics.hpp"
#include "loratwin/placement.hpp"
#include "loratwin/predictor.hpp"
#include "loratwin/server_config.hpp"
#include "loratwin/workload.hpp"

namespace loratwin {

// --- Inputs ---------------------------------------------------------------

WorkloadSpec workload_from_json(const std::string& text);
WorkloadSpec load_workload(const std::string& path);
std::string workload_to_json(const WorkloadSpec& spec);

ServerConfig server_config_from_json(const std::string& text);
ServerConfig load_server_config(const std::string& path);
std::string server_config_to_json(const ServerConfig& config);

Condition condition_from_json(const std::string& text);
Condition load_condition(const std::string& path);

DatasetSpec dataset_spec_from_json(const std::string& text);
DatasetSpec load_dataset_spec(const std::string& path);

// A scenario file carries either pre-reduced headline metrics or raw
// per-request token timestamps (reduced here via reduce_trace).
std::vector<ScenarioMetrics> scenarios_from_json(const std::string& text);
std::vector<ScenarioMetrics> load_scenarios(const std::string& path);
std::string scenarios_to_json(const std::vector<ScenarioMetrics>& scenarios);

// --- Outputs --------------------------------------------------------------

struct SimulationReportOptions {
  bool include_requests = false;   // per-request emit times and lifecycle
  bool include_trace = false;      // per-iteration rows (if recorded)
  bool include_wall_time = false;  // host timing; off keeps output reproducible
};

std::string simulation_report_json(const SimulationResult& result, const MetricsSummary& metrics,
                                   const SimulationReportOptions& options = {});

std::string placement_result_to_json(const PlacementResult& result);

std::string compare_report_to_json(const CompareReport& report);

// --- Model files ----------------------------------------------------------

// What `train` writes and `predict`/`rules` read: the three forests plus
// optional linear baselines and dataset provenance.
struct ModelBundle {
  PlacementModel model;
  std::optional<LinearBaseline> linear_throughput;
  std::optional<LinearBaseline> linear_n_star;
  std::optional<LinearBaseline> linear_g_star;

  std::size_t dataset_rows = 0;   // rows read (before starved filtering)
  std::size_t trained_rows = 0;   // rows the forests actually saw
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
};

std::string model_bundle_to_json(const ModelBundle& bundle);
ModelBundle model_bundle_from_json(const std::string& text);
ModelBundle load_model_bundle(const std::string& path);

// --- Files ----------------------------------------------------------------

std::string read_text_file(const std::string& path);  // ValidationError if unreadable
void write_text_file(const std::string& path, const std::string& text);

}  // namespace loratwin
