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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace loratwin {

// Where adapter weights are fetched from on a slot miss.
enum class LoadSource { Cpu, Disk };

std::string to_string(LoadSource source);
LoadSource load_source_from_string(const std::string& s);

// Coefficients of the per-iteration latency model:
//   lat_step = lat_sched + lat_load + lat_model * lat_adapters
//   lat_sched    = k1*r_running + k2*r_waiting + k3*r_waiting*(g/n)
//   lat_model    = k4*r_running + k5
//   lat_adapters = 1 if a_running == 0 else k6*a_running + k7
struct LatencyCoefficients {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  double k5 = 0.0;
  double k6 = 0.0;
  double k7 = 1.0;

  void validate() const;
};

// KV-cache capacity accounting, in tokens: a fixed budget at zero slots,
// reduced by a per-slot cost that grows with the slot's adapter rank.
struct MemoryModel {
  std::int64_t total_kv_budget = 0;
  double kv_bytes_per_token = 0.0;  // informational; never used in decisions

  // Either an explicit rank -> tokens table, a linear rule
  // (base_rank8 * rank / 8), or both (table wins where present).
  std::map<int, std::int64_t> slot_cost_table;
  std::optional<double> slot_cost_base_rank8;

  std::int64_t slot_cost_tokens(int rank) const;  // rank 0 (base model) -> 0
  void validate() const;
};

// Adapter load latency, benchmarked per rank for CPU-resident weights;
// disk loads are a constant factor slower.
struct LoadLatencyTable {
  std::map<int, double> cpu_load_seconds;
  double disk_multiplier = 1.7;
  LoadSource default_source = LoadSource::Cpu;

  double load_latency(int rank, LoadSource source) const;
  void validate() const;
};

// --- The five estimators -------------------------------------------------

// Token capacity left for KV after G slots are carved out; floors at 0.
// `slot_rank_profile` must have exactly `g` entries.
std::int64_t mem_max(const MemoryModel& mm, int g, const std::vector<int>& slot_rank_profile);

// Scheduler overhead. g/n is clamped at 1 when there are more slots than
// served adapters; the result is clamped at 0. n or g == 0 is a domain error.
double lat_sched(const LatencyCoefficients& c, int r_running, int r_waiting, int g, int n);

double lat_model(const LatencyCoefficients& c, int r_running);

// Dimensionless multiplier; exactly 1.0 with no active adapters (the
// zero-to-one transition is a discontinuity, not part of the linear term).
double lat_adapters(const LatencyCoefficients& c, int a_running);

// Sum of the individual load latencies (loads are serial).
double lat_load(const LoadLatencyTable& t, const std::vector<std::pair<int, LoadSource>>& loads);

double lat_step(const LatencyCoefficients& c, const LoadLatencyTable& t, int r_running,
                int r_waiting, int g, int n, int a_running,
                const std::vector<std::pair<int, LoadSource>>& loads);

// --- Fitting -------------------------------------------------------------

// Ordinary least squares: rows of `features` against `observed`. A
// rank-deficient design matrix raises FitError naming the collinear
// columns (by `feature_names` when given, by index otherwise).
std::vector<double> fit_linear(const std::vector<std::vector<double>>& features,
                               const std::vector<double>& observed,
                               const std::vector<std::string>& feature_names = {});

}  // namespace loratwin
