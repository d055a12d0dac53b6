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

#include "loratwin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "loratwin/errors.hpp"

namespace loratwin {

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double ideal_throughput(const WorkloadSpec& workload, bool include_input) {
  double total = 0.0;
  for (const AdapterSpec& adapter : workload.adapters) {
    const LengthSpec& lengths = workload.lengths_for(adapter);
    double tokens = lengths.output_mean();
    if (include_input) tokens += lengths.input_mean();
    total += adapter.rate * tokens;
  }
  return total;
}

double percentile_nearest_rank(std::vector<double> values, double pct) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

double smape(const std::vector<double>& predicted, const std::vector<double>& actual) {
  if (predicted.size() != actual.size())
    throw ValidationError("smape: series length mismatch (" + std::to_string(predicted.size()) +
                          " vs " + std::to_string(actual.size()) + ")");
  if (predicted.empty()) throw ValidationError("smape: empty series");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double denom = (std::abs(predicted[i]) + std::abs(actual[i])) / 2.0;
    if (denom == 0.0) continue;  // both zero: perfect agreement
    sum += 100.0 * std::abs(predicted[i] - actual[i]) / denom;
  }
  return sum / static_cast<double>(predicted.size());
}

MetricsSummary compute_metrics(const SimulationResult& result, const WorkloadSpec& workload,
                               bool ideal_includes_input) {
  MetricsSummary m;
  m.ideal_throughput_tok_s = ideal_throughput(workload, ideal_includes_input);

  if (result.requests.empty()) {
    m.degenerate = true;
    return m;
  }

  const double window = result.duration_s;
  std::vector<double> ttft;
  std::vector<double> itl;
  std::int64_t tokens_in_window = 0;
  double rejected_demand_tok_s = 0.0;

  for (const RequestState& r : result.requests) {
    if (r.phase == Phase::Rejected) {
      ++m.rejected_count;
      rejected_demand_tok_s += static_cast<double>(r.request.output_tokens) / window;
    }
    if (r.phase == Phase::Finished) ++m.finished_count;
    if (r.first_token_time_s) ttft.push_back(*r.first_token_time_s - r.request.arrival_time_s);
    for (std::size_t i = 0; i < r.token_emit_times_s.size(); ++i) {
      if (r.token_emit_times_s[i] <= window) ++tokens_in_window;
      if (i > 0) itl.push_back(r.token_emit_times_s[i] - r.token_emit_times_s[i - 1]);
    }
  }

  m.throughput_tok_s = static_cast<double>(tokens_in_window) / window;
  m.ttft_mean_s = mean_of(ttft);
  m.ttft_p50_s = percentile_nearest_rank(ttft, 50.0);
  m.ttft_p99_s = percentile_nearest_rank(ttft, 99.0);
  m.itl_mean_s = mean_of(itl);
  m.itl_p50_s = percentile_nearest_rank(itl, 50.0);
  m.itl_p99_s = percentile_nearest_rank(itl, 99.0);

  // Oversized requests can never be served; drop their demand from the
  // ideal so the verdict reflects reachable throughput.
  const double ideal_effective =
      std::max(m.ideal_throughput_tok_s - rejected_demand_tok_s, 0.0);
  m.starved = m.throughput_tok_s < 0.9 * ideal_effective;
  return m;
}

CompareReport compare_traces(const std::vector<ScenarioMetrics>& dt,
                             const std::vector<ScenarioMetrics>& real) {
  std::map<std::string, const ScenarioMetrics*> real_by_key;
  for (const ScenarioMetrics& s : real) real_by_key[s.key] = &s;

  CompareReport report;
  std::vector<double> p_tput, a_tput, p_itl, a_itl, p_ttft, a_ttft;
  std::map<std::string, bool> real_matched;
  for (const ScenarioMetrics& s : real) real_matched[s.key] = false;

  for (const ScenarioMetrics& s : dt) {
    auto it = real_by_key.find(s.key);
    if (it == real_by_key.end()) {
      report.unmatched_keys.push_back("dt:" + s.key);
      continue;
    }
    real_matched[s.key] = true;
    report.matched_keys.push_back(s.key);
    p_tput.push_back(s.throughput_tok_s);
    a_tput.push_back(it->second->throughput_tok_s);
    p_itl.push_back(s.itl_mean_s);
    a_itl.push_back(it->second->itl_mean_s);
    p_ttft.push_back(s.ttft_mean_s);
    a_ttft.push_back(it->second->ttft_mean_s);
  }
  for (const auto& [key, matched] : real_matched) {
    if (!matched) report.unmatched_keys.push_back("real:" + key);
  }
  if (report.matched_keys.empty()) {
    std::string msg = "compare_traces: no matching scenario keys;";
    for (const std::string& k : report.unmatched_keys) msg += " " + k;
    throw ValidationError(msg);
  }

  report.throughput_smape_pct = smape(p_tput, a_tput);
  report.itl_smape_pct = smape(p_itl, a_itl);
  report.ttft_smape_pct = smape(p_ttft, a_ttft);
  return report;
}

ScenarioMetrics reduce_trace(const std::vector<TraceRequest>& requests, double window_s,
                             const std::string& key) {
  if (window_s <= 0.0) throw ValidationError("trace window must be > 0");
  ScenarioMetrics s;
  s.key = key;
  std::vector<double> ttft;
  std::vector<double> itl;
  std::int64_t tokens_in_window = 0;
  for (const TraceRequest& r : requests) {
    if (!r.token_times_s.empty()) ttft.push_back(r.token_times_s.front() - r.arrival_s);
    for (std::size_t i = 0; i < r.token_times_s.size(); ++i) {
      if (r.token_times_s[i] <= window_s) ++tokens_in_window;
      if (i > 0) itl.push_back(r.token_times_s[i] - r.token_times_s[i - 1]);
    }
  }
  s.throughput_tok_s = static_cast<double>(tokens_in_window) / window_s;
  s.ttft_mean_s = mean_of(ttft);
  s.itl_mean_s = mean_of(itl);
  return s;
}

}  // namespace loratwin
