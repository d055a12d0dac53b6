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
#include <string>
#include <utility>
#include <vector>

namespace loratwin {

enum class LengthMode { Full, Mean };

// Request length specification. Full mode carries the exact
// (input, output) token pairs; Mean mode carries per-dimension moments and
// samples a rounded, clamped normal.
struct LengthSpec {
  LengthMode mode = LengthMode::Mean;
  std::vector<std::pair<int, int>> full_lengths;  // Full mode only
  double mean_input = 0.0;
  double std_input = 0.0;
  double mean_output = 0.0;
  double std_output = 0.0;

  static LengthSpec full(std::vector<std::pair<int, int>> pairs);
  static LengthSpec mean(double mean_in, double std_in, double mean_out, double std_out);

  // Moments of the effective distribution. In Full mode these are the
  // empirical mean and population std of the list, so a Mean-mode run can be
  // derived from a Full-mode spec.
  double input_mean() const;
  double input_std() const;
  double output_mean() const;
  double output_std() const;

  // Length stats (max, min, mean, std) per dimension. Mean mode has no
  // defined extremes, so max = min = mean there.
  struct Stats {
    double max, min, mean, std;
  };
  Stats input_stats() const;
  Stats output_stats() const;

  // Returns a Mean-mode spec with the same moments.
  LengthSpec as_mean() const;

  // Throws ValidationError naming `path` plus the offending field.
  void validate(const std::string& path) const;
};

// One adapter class in the workload: identity, LoRA rank and Poisson
// arrival rate. Rank 0 denotes base-model traffic (no adapter attached):
// it occupies no slot, incurs no load latency and does not count toward
// the unique-adapter overhead.
struct AdapterSpec {
  int adapter_id = 0;
  int rank = 8;
  double rate = 0.0;                     // requests per second
  std::optional<LengthSpec> lengths;     // overrides the workload-level spec
};

struct WorkloadSpec {
  std::vector<AdapterSpec> adapters;
  LengthSpec lengths;
  double duration_s = 0.0;  // arrival window
  std::uint64_t seed = 0;

  const LengthSpec& lengths_for(const AdapterSpec& adapter) const {
    return adapter.lengths ? *adapter.lengths : lengths;
  }

  // `for_simulation` additionally requires duration > 0 and a non-empty
  // adapter list; the generator alone tolerates both degenerate cases.
  void validate(bool for_simulation = false) const;
};

struct Request {
  std::int64_t request_id = 0;
  int adapter_id = 0;
  double arrival_time_s = 0.0;
  int input_tokens = 1;
  int output_tokens = 1;

  bool operator==(const Request&) const = default;
};

// Draws `n` (input, output) pairs. Full mode shuffles the list under the
// seed and cycles through it, reshuffling at each wrap; Mean mode draws a
// per-dimension normal, rounds to nearest and clamps to >= 1.
std::vector<std::pair<int, int>> sample_lengths(const LengthSpec& spec, std::size_t n,
                                                std::uint64_t seed, std::uint64_t stream = 0);

// Poisson arrival streams, one substream per adapter, merged and sorted by
// (arrival_time, adapter_id, per-adapter sequence). Only arrivals strictly
// inside [0, duration) are emitted. `mode_override` forces Full or Mean
// length sampling regardless of what the spec declares (Mean may always be
// derived; Full requires the spec to carry the list).
std::vector<Request> generate_arrivals(const WorkloadSpec& spec,
                                       std::optional<LengthMode> mode_override = std::nullopt);

}  // namespace loratwin
