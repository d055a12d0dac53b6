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

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "loratwin/server_config.hpp"
#include "loratwin/workload.hpp"

namespace loratwin {

// One leg of a workload condition's adapter mix; served adapters cycle
// through the mix round-robin.
struct AdapterTemplate {
  int rank = 8;
  double rate = 0.0;
};

// A workload condition: the varying characteristics the predictor will see.
struct Condition {
  std::vector<AdapterTemplate> mix;
  LengthSpec lengths;
};

inline constexpr std::size_t kNumFeatures = 16;

// max/min/mean/std of each of {rate, rank, input_len, output_len}.
struct WorkloadFeatures {
  std::array<double, kNumFeatures> values{};

  static const std::array<std::string, kNumFeatures>& names();
  static int index_of(const std::string& name);  // -1 if unknown
};

WorkloadFeatures encode_workload(const Condition& condition);

// Builds the N-adapter workload a sweep point simulates: adapter ids 1..N,
// (rank, rate) from the mix round-robin.
WorkloadSpec instantiate_condition(const Condition& condition, int served_adapters,
                                   double duration_s, std::uint64_t seed);

struct FrontierPoint {
  int n = 0;
  int g = 0;
  double throughput_tok_s = 0.0;
  bool starved = false;
  bool skipped = false;  // pruned by the early-exit heuristic (not simulated)
};

struct PlacementResult {
  double max_throughput_tok_s = 0.0;
  int n_star = 0;
  int g_star = 0;
  std::vector<FrontierPoint> frontier;
  bool all_starved = false;   // no non-starved point in the grid
  bool frontier_open = false; // optimum sits on the grid edge, nothing starved
};

struct SweepGrid {
  std::vector<int> n_values;  // ascending

  // Geometric uses {8, N/4, N/2, N} (clamped to [1, N], deduplicated) per
  // N; Explicit clamps g_values to [1, N] and deduplicates.
  enum class GMode { Geometric, Explicit };
  GMode g_mode = GMode::Geometric;
  std::vector<int> g_values;

  std::vector<int> g_candidates(int n) const;
  void validate() const;
};

struct SweepOptions {
  bool early_exit = true;
  int early_exit_k = 3;  // consecutive N values without improvement
  int jobs = 1;
  LengthMode mode = LengthMode::Mean;
};

// Simulates every (N, G) grid point of the condition (config.slots is
// overridden per point) and returns the highest-throughput non-starved
// placement plus the full frontier.
PlacementResult sweep_optimal(const Condition& condition, const ServerConfig& config,
                              const SweepGrid& grid, double duration_s, std::uint64_t seed,
                              const SweepOptions& options = {});

// --- Dataset generation --------------------------------------------------

struct DatasetRow {
  WorkloadFeatures features;
  double max_throughput_tok_s = 0.0;
  int n_star = 0;
  int g_star = 0;
  bool all_starved = false;
  std::uint64_t condition_hash = 0;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
};

// Stable 64-bit identity of (condition, duration, seed, grid): FNV-1a over
// a canonical text rendering. Used for resume and train/test splitting.
std::uint64_t condition_hash(const Condition& condition, double duration_s, std::uint64_t seed,
                             const SweepGrid& grid);

struct DatasetSpec {
  std::vector<double> rates;  // values a rate triple is drawn from
  std::vector<int> ranks;     // values a rank triple is drawn from
  int triple_size = 3;
  // Keep every stride-th condition (1 = all); for desk-scale runs.
  int condition_stride = 1;
  LengthSpec lengths;
  double duration_s = 600.0;
  std::uint64_t seed = 0;
  SweepGrid grid;
  SweepOptions sweep;
};

// All size-`triple_size` combinations (with repetition, non-decreasing) of
// rates x ranks, subsampled by stride; deterministic order.
std::vector<Condition> enumerate_conditions(const DatasetSpec& spec);

struct DatasetProgress {
  std::size_t total_conditions = 0;
  std::size_t completed = 0;  // includes rows found on resume
  std::size_t failed = 0;
};

// Sweeps every condition and appends one CSV row each to `out_csv`,
// skipping hashes already present (resume). Per-condition failures are
// reported via `on_error` without aborting the run. Returns progress
// counts. Parallel over conditions with spec.sweep.jobs workers; output
// rows are written in canonical condition order regardless of completion
// order.
DatasetProgress generate_dataset(const DatasetSpec& spec, const ServerConfig& config,
                                 const std::string& out_csv,
                                 const std::function<void(const std::string&)>& on_error = {});

// Dataset CSV round-trip (header: 16 feature names, targets, bookkeeping).
void write_dataset_header(std::ostream& out);
void write_dataset_row(std::ostream& out, const DatasetRow& row);
std::vector<DatasetRow> read_dataset_csv(const std::string& path);

}  // namespace loratwin
