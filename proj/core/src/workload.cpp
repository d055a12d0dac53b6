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

#include "loratwin/workload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "loratwin/errors.hpp"
#include "loratwin/rng.hpp"

namespace loratwin {

namespace {

LengthSpec::Stats list_stats(const std::vector<std::pair<int, int>>& pairs, bool input) {
  LengthSpec::Stats s{0.0, 0.0, 0.0, 0.0};
  if (pairs.empty()) return s;
  s.max = std::numeric_limits<double>::lowest();
  s.min = std::numeric_limits<double>::max();
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double v = input ? p.first : p.second;
    s.max = std::max(s.max, v);
    s.min = std::min(s.min, v);
    sum += v;
  }
  s.mean = sum / static_cast<double>(pairs.size());
  double sq = 0.0;
  for (const auto& p : pairs) {
    const double v = input ? p.first : p.second;
    sq += (v - s.mean) * (v - s.mean);
  }
  s.std = std::sqrt(sq / static_cast<double>(pairs.size()));
  return s;
}

int round_clamp_token(double v) {
  const double r = std::round(v);
  return r < 1.0 ? 1 : static_cast<int>(r);
}

}  // namespace

LengthSpec LengthSpec::full(std::vector<std::pair<int, int>> pairs) {
  LengthSpec spec;
  spec.mode = LengthMode::Full;
  spec.full_lengths = std::move(pairs);
  return spec;
}

LengthSpec LengthSpec::mean(double mean_in, double std_in, double mean_out, double std_out) {
  LengthSpec spec;
  spec.mode = LengthMode::Mean;
  spec.mean_input = mean_in;
  spec.std_input = std_in;
  spec.mean_output = mean_out;
  spec.std_output = std_out;
  return spec;
}

double LengthSpec::input_mean() const { return input_stats().mean; }
double LengthSpec::input_std() const { return input_stats().std; }
double LengthSpec::output_mean() const { return output_stats().mean; }
double LengthSpec::output_std() const { return output_stats().std; }

LengthSpec::Stats LengthSpec::input_stats() const {
  if (mode == LengthMode::Full) return list_stats(full_lengths, /*input=*/true);
  return Stats{mean_input, mean_input, mean_input, std_input};
}

LengthSpec::Stats LengthSpec::output_stats() const {
  if (mode == LengthMode::Full) return list_stats(full_lengths, /*input=*/false);
  return Stats{mean_output, mean_output, mean_output, std_output};
}

LengthSpec LengthSpec::as_mean() const {
  const Stats in = input_stats();
  const Stats out = output_stats();
  return mean(in.mean, in.std, out.mean, out.std);
}

void LengthSpec::validate(const std::string& path) const {
  if (mode == LengthMode::Full) {
    if (full_lengths.empty())
      throw ValidationError(path + ".full_lengths: Full mode requires a non-empty length list");
    for (std::size_t i = 0; i < full_lengths.size(); ++i) {
      if (full_lengths[i].first < 1 || full_lengths[i].second < 1)
        throw ValidationError(path + ".full_lengths[" + std::to_string(i) +
                              "]: token counts must be >= 1");
    }
    return;
  }
  if (mean_input <= 0.0)
    throw ValidationError(path + ".mean_input: must be > 0, got " + std::to_string(mean_input));
  if (mean_output <= 0.0)
    throw ValidationError(path + ".mean_output: must be > 0, got " + std::to_string(mean_output));
  if (std_input < 0.0)
    throw ValidationError(path + ".std_input: must be >= 0, got " + std::to_string(std_input));
  if (std_output < 0.0)
    throw ValidationError(path + ".std_output: must be >= 0, got " + std::to_string(std_output));
}

void WorkloadSpec::validate(bool for_simulation) const {
  if (for_simulation) {
    if (adapters.empty()) throw ValidationError("workload.adapters: must be non-empty");
    if (duration_s <= 0.0)
      throw ValidationError("workload.duration_s: must be > 0, got " + std::to_string(duration_s));
  } else {
    if (duration_s < 0.0)
      throw ValidationError("workload.duration_s: must be >= 0, got " + std::to_string(duration_s));
  }
  std::unordered_set<int> seen;
  for (std::size_t i = 0; i < adapters.size(); ++i) {
    const AdapterSpec& a = adapters[i];
    const std::string path = "workload.adapters[" + std::to_string(i) + "]";
    // Rank 0 is allowed and means base-model traffic with no adapter attached.
    if (a.rank < 0)
      throw ValidationError(path + ".rank: must be >= 0, got " + std::to_string(a.rank));
    if (a.rate <= 0.0)
      throw ValidationError(path + ".rate: must be > 0, got " + std::to_string(a.rate));
    if (!seen.insert(a.adapter_id).second)
      throw ValidationError(path + ".adapter_id: duplicate id " + std::to_string(a.adapter_id));
    if (a.lengths) a.lengths->validate(path + ".lengths");
  }
  lengths.validate("workload.lengths");
}

std::vector<std::pair<int, int>> sample_lengths(const LengthSpec& spec, std::size_t n,
                                                std::uint64_t seed, std::uint64_t stream) {
  spec.validate("lengths");
  std::vector<std::pair<int, int>> out;
  out.reserve(n);
  RngStream rng(seed, {stream_id::kLengths, stream});
  if (spec.mode == LengthMode::Full) {
    std::vector<std::pair<int, int>> deck = spec.full_lengths;
    rng.shuffle(deck);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (cursor == deck.size()) {  // wrapped: reshuffle so cycles stay decorrelated
        rng.shuffle(deck);
        cursor = 0;
      }
      out.push_back(deck[cursor++]);
    }
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int in = round_clamp_token(rng.normal(spec.mean_input, spec.std_input));
    const int outl = round_clamp_token(rng.normal(spec.mean_output, spec.std_output));
    out.emplace_back(in, outl);
  }
  return out;
}

std::vector<Request> generate_arrivals(const WorkloadSpec& spec,
                                       std::optional<LengthMode> mode_override) {
  spec.validate(/*for_simulation=*/false);
  std::vector<Request> merged;
  for (const AdapterSpec& adapter : spec.adapters) {
    RngStream arrivals(spec.seed,
                       {stream_id::kArrivals, static_cast<std::uint64_t>(adapter.adapter_id)});
    std::vector<double> times;
    double t = 0.0;
    for (;;) {
      t += arrivals.exponential(adapter.rate);
      if (t >= spec.duration_s) break;
      times.push_back(t);
    }
    LengthSpec lengths = spec.lengths_for(adapter);
    if (mode_override && *mode_override != lengths.mode) {
      if (*mode_override == LengthMode::Full)
        throw ValidationError("workload.lengths: cannot force Full mode without a length list");
      lengths = lengths.as_mean();
    }
    const auto pairs = sample_lengths(lengths, times.size(), spec.seed,
                                      static_cast<std::uint64_t>(adapter.adapter_id));
    for (std::size_t i = 0; i < times.size(); ++i) {
      Request r;
      r.adapter_id = adapter.adapter_id;
      r.arrival_time_s = times[i];
      r.input_tokens = pairs[i].first;
      r.output_tokens = pairs[i].second;
      merged.push_back(r);
    }
  }
  // Per-adapter streams are already time-ordered, so a stable sort on
  // arrival time alone realizes the (time, adapter_id, sequence) order:
  // adapters were appended in spec order and ids are unique.
  std::stable_sort(merged.begin(), merged.end(), [](const Request& a, const Request& b) {
    if (a.arrival_time_s != b.arrival_time_s) return a.arrival_time_s < b.arrival_time_s;
    return a.adapter_id < b.adapter_id;
  });
  for (std::size_t i = 0; i < merged.size(); ++i)
    merged[i].request_id = static_cast<std::int64_t>(i);
  return merged;
}

}  // namespace loratwin
