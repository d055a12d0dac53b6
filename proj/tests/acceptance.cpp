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

// Release gate for the twin. Each criterion prints exactly one line:
//   PASS criterion N: <summary>
//   FAIL criterion N: <summary>
// Run a single criterion with `--criterion N` (the ctest wiring), or all of
// them with no arguments.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "loratwin/engine.hpp"
#include "loratwin/errors.hpp"
#include "loratwin/estimators.hpp"
#include "loratwin/json_io.hpp"
#include "loratwin/metrics.hpp"
#include "loratwin/placement.hpp"
#include "loratwin/predictor.hpp"
#include "loratwin/rng.hpp"
#include "loratwin/server_config.hpp"
#include "loratwin/workload.hpp"
#include "test_support.hpp"

namespace {

using namespace loratwin;
using nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome fail(const std::string& detail) { return {false, detail}; }
Outcome pass(const std::string& detail) { return {true, detail}; }

struct StopWatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt(double value, int precision = 3) {
  std::ostringstream out;
  out.precision(precision);
  out << std::fixed << value;
  return out.str();
}

// Runs a CLI invocation with stdout/stderr muted, so criterion output stays
// one line per criterion.
int run_cli_quiet(const std::vector<std::string>& args) {
  std::fflush(stdout);
  std::fflush(stderr);
  const int saved_out = dup(STDOUT_FILENO);
  const int saved_err = dup(STDERR_FILENO);
  const int null_fd = open("/dev/null", O_WRONLY);
  dup2(null_fd, STDOUT_FILENO);
  dup2(null_fd, STDERR_FILENO);
  const int rc = cli::run(args);
  std::fflush(stdout);
  std::fflush(stderr);
  dup2(saved_out, STDOUT_FILENO);
  dup2(saved_err, STDERR_FILENO);
  close(saved_out);
  close(saved_err);
  close(null_fd);
  return rc;
}

std::string tmp(const std::string& stem) { return test_support::temp_path("accept_" + stem); }

// --- criterion 1: determinism across repeats and job counts -----------------

Outcome criterion1() {
  StopWatch watch;

  WorkloadSpec workload;
  workload.adapters.push_back({.adapter_id = 1, .rank = 8, .rate = 0.5, .lengths = {}});
  workload.adapters.push_back({.adapter_id = 2, .rank = 16, .rate = 0.25, .lengths = {}});
  workload.lengths = LengthSpec::mean(12.0, 3.0, 6.0, 2.0);
  workload.duration_s = 20.0;
  workload.seed = 11;
  const std::string wl = tmp("wl.json");
  write_text_file(wl, workload_to_json(workload));
  const std::string cfg = tmp("cfg.json");
  write_text_file(cfg, server_config_to_json(h100_like_config(2)));

  auto run_twice_equal = [&](const std::vector<std::string>& base, const std::string& out_flagged,
                             const std::string& label, std::string* first_out) -> std::optional<std::string> {
    const std::string out_a = tmp(label + "_a");
    const std::string out_b = tmp(label + "_b");
    std::vector<std::string> args_a = base, args_b = base;
    args_a.push_back(out_flagged);
    args_a.push_back(out_a);
    args_b.push_back(out_flagged);
    args_b.push_back(out_b);
    if (run_cli_quiet(args_a) != 0 || run_cli_quiet(args_b) != 0)
      return label + " exited nonzero";
    if (read_text_file(out_a) != read_text_file(out_b)) return label + " output differs on rerun";
    if (first_out) *first_out = out_a;
    return std::nullopt;
  };

  std::string report;
  if (auto err = run_twice_equal({"simulate", "--workload", wl, "--config", cfg}, "--out",
                                 "simulate", &report))
    return fail(*err);
  // Third run against the first.
  const std::string out_c = tmp("simulate_c");
  if (run_cli_quiet({"simulate", "--workload", wl, "--config", cfg, "--out", out_c}) != 0)
    return fail("simulate exited nonzero");
  if (read_text_file(out_c) != read_text_file(report)) return fail("simulate third run differs");

  const std::string cond = tmp("cond.json");
  write_text_file(cond, R"({
    "mix": [{"rank": 8, "rate": 0.3}, {"rank": 16, "rate": 0.15}],
    "lengths": {"mode": "mean", "mean_input": 10, "std_input": 0,
                "mean_output": 5, "std_output": 0}
  })");
  const std::string sweep1 = tmp("sweep1.json");
  const std::string sweep8 = tmp("sweep8.json");
  const std::string sweep1b = tmp("sweep1b.json");
  for (const auto& [jobs, out] :
       std::vector<std::pair<std::string, std::string>>{{"1", sweep1}, {"8", sweep8}, {"1", sweep1b}}) {
    if (run_cli_quiet({"sweep", "--condition", cond, "--config", cfg, "--n", "1,2,4",
                       "--duration", "10", "--jobs", jobs, "--out", out}) != 0)
      return fail("sweep exited nonzero");
  }
  if (read_text_file(sweep1) != read_text_file(sweep8)) return fail("sweep differs 1 vs 8 jobs");
  if (read_text_file(sweep1) != read_text_file(sweep1b)) return fail("sweep differs on rerun");

  const std::string spec = tmp("dataset_spec.json");
  write_text_file(spec, R"({
    "rates": [0.2, 0.4], "ranks": [8], "triple_size": 2, "duration_s": 5,
    "lengths": {"mode": "mean", "mean_input": 6, "std_input": 0,
                "mean_output": 3, "std_output": 0},
    "grid": {"n_values": [1, 2]}
  })");
  const std::string csv1 = tmp("data1.csv");
  const std::string csv4 = tmp("data4.csv");
  if (run_cli_quiet({"gen-dataset", "--spec", spec, "--config", cfg, "--out", csv1,
                     "--jobs", "1"}) != 0 ||
      run_cli_quiet({"gen-dataset", "--spec", spec, "--config", cfg, "--out", csv4,
                     "--jobs", "4"}) != 0)
    return fail("gen-dataset exited nonzero");
  if (read_text_file(csv1) != read_text_file(csv4)) return fail("dataset differs 1 vs 4 jobs");

  std::string model;
  if (auto err = run_twice_equal({"train", "--data", csv1, "--trees", "3", "--depth", "3",
                                  "--min-leaf", "1", "--test-fraction", "0", "--seed", "7"},
                                 "--out", "train", &model))
    return fail(*err);
  if (auto err = run_twice_equal({"predict", "--model", model, "--condition", cond}, "--out",
                                 "predict", nullptr))
    return fail(*err);
  if (auto err =
          run_twice_equal({"rules", "--model", model, "--all-trees"}, "--out", "rules", nullptr))
    return fail(*err);

  const std::string bench = tmp("bench.csv");
  test_support::write_file(bench, "r_running,latency_s\n1,0.032\n2,0.034\n5,0.040\n");
  if (auto err = run_twice_equal({"fit", "--model-csv", bench, "--kv-budget", "320000",
                                  "--slot-cost-rank8", "800", "--slots", "1"},
                                 "--out", "fit", nullptr))
    return fail(*err);

  const std::string scen = tmp("scen.json");
  write_text_file(scen, scenarios_to_json({{"mix_a", 10.0, 0.1, 0.5}}));
  if (auto err = run_twice_equal({"compare", "--dt", scen, "--real", scen}, "--out", "compare",
                                 nullptr))
    return fail(*err);

  return pass("simulate/sweep/gen-dataset/train/predict/rules/fit/compare byte-identical across "
              "repeats and job counts in " + fmt(watch.seconds(), 1) + "s");
}

// --- criterion 2: conservation and lifecycle under randomized load ----------

Outcome criterion2() {
  StopWatch watch;
  const int kSims = 200;
  std::size_t total_requests = 0, total_preemptions = 0, total_rejected = 0;

  for (int i = 0; i < kSims; ++i) {
    RngStream rng(20260823, {1001, static_cast<std::uint64_t>(i)});

    WorkloadSpec workload;
    const int n_adapters = 1 + static_cast<int>(rng.uniform_below(20));
    const std::array<int, 5> rank_pool{0, 8, 16, 32, 64};
    double total_rate = 0.0;
    for (int a = 0; a < n_adapters; ++a) {
      AdapterSpec adapter;
      adapter.adapter_id = a + 1;
      adapter.rank = rank_pool[rng.uniform_below(rank_pool.size())];
      adapter.rate = 0.05 + rng.uniform01() * 1.15;
      total_rate += adapter.rate;
      workload.adapters.push_back(adapter);
    }
    workload.lengths =
        LengthSpec::mean(1.0 + static_cast<double>(rng.uniform_below(40)), rng.uniform01() * 5.0,
                         1.0 + static_cast<double>(rng.uniform_below(20)), rng.uniform01() * 3.0);
    workload.duration_s = std::min(20.0, 350.0 / total_rate);
    workload.seed = 9000 + static_cast<std::uint64_t>(i);

    std::vector<Request> requests = generate_arrivals(workload);
    if (requests.size() > 500) requests.resize(500);

    ServerConfig config;
    config.slots = 1 + static_cast<int>(rng.uniform_below(4));
    config.latency.k1 = rng.uniform01() * 1e-4;
    config.latency.k2 = rng.uniform01() * 2e-5;
    config.latency.k3 = rng.uniform01() * 1e-4;
    config.latency.k4 = rng.uniform01() * 1e-3;
    config.latency.k5 = 0.005 + rng.uniform01() * 0.05;
    config.latency.k6 = rng.uniform01() * 0.05;
    config.latency.k7 = 1.0 + rng.uniform01() * 0.3;
    config.memory.slot_cost_base_rank8 = 50.0;
    config.load.cpu_load_seconds = {{8, 0.02}, {16, 0.03}, {32, 0.05}, {64, 0.09}};
    config.loaded_adapter_priority = (i % 2 == 0);

    // Slots are carved out for the largest rank in play; mirror that here so
    // the KV capacity the engine computes is known exactly.
    int max_rank = 0;
    for (const AdapterSpec& a : workload.adapters) max_rank = std::max(max_rank, a.rank);
    const std::int64_t overhead =
        static_cast<std::int64_t>(config.slots) * config.memory.slot_cost_tokens(max_rank);
    // Keep capacity >= the largest single request so every admitted request
    // can finish; tight budgets force preemption churn, loose ones do not.
    std::int64_t max_demand = 8;
    for (const Request& r : requests)
      max_demand = std::max<std::int64_t>(max_demand, r.input_tokens + r.output_tokens);
    const bool tight = (i % 4 != 3);
    const std::int64_t headroom =
        tight ? static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(max_demand) * 2))
              : static_cast<std::int64_t>(rng.uniform_below(20000));
    config.memory.total_kv_budget = overhead + max_demand + 1 + headroom;

    // Every fifth run carries one impossible request to cover rejection.
    bool expect_rejection = false;
    if (i % 5 == 0 && !requests.empty()) {
      const std::int64_t capacity = config.memory.total_kv_budget - overhead;
      requests[requests.size() / 2].input_tokens = static_cast<int>(capacity + 5);
      expect_rejection = true;
    }

    SimOptions options;
    options.check_invariants = true;
    const SimulationResult result =
        run_scripted(requests, workload.adapters, workload.duration_s, config, options);

    std::size_t rejected = 0;
    for (const RequestState& r : result.requests) {
      if (r.phase == Phase::Rejected) {
        ++rejected;
        if (r.tokens_generated != 0 || !r.token_emit_times_s.empty())
          return fail("sim " + std::to_string(i) + ": rejected request produced tokens");
        continue;
      }
      if (r.phase != Phase::Finished)
        return fail("sim " + std::to_string(i) + ": request " +
                    std::to_string(r.request.request_id) + " ended in a non-terminal phase");
      if (r.tokens_generated != r.request.output_tokens ||
          static_cast<int>(r.token_emit_times_s.size()) != r.request.output_tokens)
        return fail("sim " + std::to_string(i) + ": token count mismatch");
      if (!r.first_token_time_s || *r.first_token_time_s != r.token_emit_times_s.front() ||
          *r.first_token_time_s < r.request.arrival_time_s)
        return fail("sim " + std::to_string(i) + ": first-token bookkeeping broken");
      if (r.completion_time_s != r.token_emit_times_s.back())
        return fail("sim " + std::to_string(i) + ": completion is not the last emit");
      if (!std::is_sorted(r.token_emit_times_s.begin(), r.token_emit_times_s.end()))
        return fail("sim " + std::to_string(i) + ": emit times go backwards");
      total_preemptions += static_cast<std::size_t>(r.preemption_count);
    }
    if (expect_rejection && rejected == 0)
      return fail("sim " + std::to_string(i) + ": oversized request was not rejected");
    total_rejected += rejected;
    total_requests += result.requests.size();
  }

  return pass(std::to_string(kSims) + " randomized simulations, " +
              std::to_string(total_requests) + " requests, " + std::to_string(total_preemptions) +
              " preemptions, " + std::to_string(total_rejected) +
              " rejections; per-iteration ledger and lifecycle invariants held (" +
              fmt(watch.seconds(), 1) + "s)");
}

// --- criterion 3: analytic oracle for an uncontended single flow ------------

Outcome criterion3() {
  const double kStep = 0.025;  // the only latency term in play
  const double kRate = 0.05;
  const double kDuration = 3600.0;

  WorkloadSpec workload;
  workload.adapters.push_back({.adapter_id = 1, .rank = 0, .rate = kRate, .lengths = {}});
  workload.lengths = LengthSpec::mean(10.0, 0.0, 3.0, 0.0);
  workload.duration_s = kDuration;

  ServerConfig config;
  config.slots = 1;
  config.latency.k5 = kStep;
  config.latency.k7 = 1.0;
  config.memory.total_kv_budget = 100'000;
  config.memory.slot_cost_base_rank8 = 100.0;
  config.load.cpu_load_seconds = {{8, 0.1}};

  // Find a seed whose arrival stream honors the precondition: requests never
  // overlap (gap > 3 steps) and the count sits inside the 2% throughput
  // window. The selection looks only at arrivals, never at engine output.
  std::uint64_t chosen_seed = 0;
  std::size_t count = 0;
  for (std::uint64_t seed = 1; seed <= 4000 && chosen_seed == 0; ++seed) {
    workload.seed = seed;
    const std::vector<Request> requests = generate_arrivals(workload);
    if (requests.size() < 177 || requests.size() > 183) continue;
    bool clean = requests.back().arrival_time_s + 3.0 * kStep < kDuration;
    for (std::size_t i = 1; clean && i < requests.size(); ++i)
      clean = requests[i].arrival_time_s - requests[i - 1].arrival_time_s > 3.0 * kStep + 1e-9;
    if (!clean) continue;
    chosen_seed = seed;
    count = requests.size();
  }
  if (chosen_seed == 0) return fail("no uncontended arrival stream found in 4000 seeds");

  workload.seed = chosen_seed;
  const SimulationResult result =
      run_simulation(workload, config, LengthMode::Mean, {.check_invariants = true});
  const MetricsSummary metrics = compute_metrics(result, workload);

  for (const RequestState& r : result.requests) {
    if (r.phase != Phase::Finished) return fail("request did not finish");
    const double ttft = *r.first_token_time_s - r.request.arrival_time_s;
    if (std::abs(ttft - kStep) > 1e-9)
      return fail("ttft " + std::to_string(ttft) + " != step latency");
    for (std::size_t t = 1; t < r.token_emit_times_s.size(); ++t) {
      const double itl = r.token_emit_times_s[t] - r.token_emit_times_s[t - 1];
      if (std::abs(itl - kStep) > 1e-9)
        return fail("itl " + std::to_string(itl) + " != step latency");
    }
  }
  const double ideal = kRate * 3.0;
  const double rel = std::abs(metrics.throughput_tok_s - ideal) / ideal;
  if (rel > 0.02)
    return fail("throughput " + fmt(metrics.throughput_tok_s, 4) + " deviates " +
                fmt(100.0 * rel, 2) + "% from rate*output");
  return pass("seed " + std::to_string(chosen_seed) + ", " + std::to_string(count) +
              " requests: ttft and itl equal the step latency to 1e-9, throughput within " +
              fmt(100.0 * rel, 2) + "% of ideal");
}

// --- criterion 4: hand-traced oracle replay ---------------------------------

Outcome criterion4() {
  const json fixture = test_support::load_fixture("hand_traced_two_adapter.json");
  const double tol = fixture.at("tolerance").get<double>();

  const json& cj = fixture.at("config");
  ServerConfig config;
  config.slots = cj.at("slots").get<int>();
  config.loaded_adapter_priority = cj.at("loaded_adapter_priority").get<bool>();
  config.iteration_cap = cj.at("iteration_cap").get<std::int64_t>();
  config.ideal_includes_input = cj.at("ideal_includes_input").get<bool>();
  const json& est = cj.at("estimators");
  const json& lat = est.at("latency");
  config.latency = {lat.at("k1").get<double>(), lat.at("k2").get<double>(),
                    lat.at("k3").get<double>(), lat.at("k4").get<double>(),
                    lat.at("k5").get<double>(), lat.at("k6").get<double>(),
                    lat.at("k7").get<double>()};
  config.memory.total_kv_budget = est.at("memory").at("total_kv_budget").get<std::int64_t>();
  config.memory.kv_bytes_per_token = est.at("memory").at("kv_bytes_per_token").get<double>();
  for (const auto& [rank, tokens] : est.at("memory").at("slot_cost_tokens").items())
    config.memory.slot_cost_table[std::stoi(rank)] = tokens.get<std::int64_t>();
  for (const auto& [rank, seconds] : est.at("load").at("cpu_load_seconds").items())
    config.load.cpu_load_seconds[std::stoi(rank)] = seconds.get<double>();
  config.load.disk_multiplier = est.at("load").at("disk_multiplier").get<double>();

  std::vector<AdapterSpec> adapters;
  for (const json& a : fixture.at("adapters"))
    adapters.push_back({.adapter_id = a.at("adapter_id").get<int>(),
                        .rank = a.at("rank").get<int>(),
                        .rate = 0.0,
                        .lengths = {}});
  std::vector<Request> requests;
  for (const json& r : fixture.at("requests"))
    requests.push_back({.request_id = r.at("request_id").get<std::int64_t>(),
                        .adapter_id = r.at("adapter_id").get<int>(),
                        .arrival_time_s = r.at("arrival_time_s").get<double>(),
                        .input_tokens = r.at("input_tokens").get<int>(),
                        .output_tokens = r.at("output_tokens").get<int>()});

  const SimulationResult result = run_scripted(
      requests, adapters, fixture.at("duration_s").get<double>(), config,
      {.check_invariants = true});

  const json& expected = fixture.at("expected");
  if (result.iterations != expected.at("iterations").get<std::int64_t>())
    return fail("iteration count differs");
  if (std::abs(result.final_clock_s - expected.at("final_clock_s").get<double>()) > tol)
    return fail("final clock differs");
  const json& loads = expected.at("load_events");
  if (result.load_events.size() != loads.size()) return fail("load event count differs");
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const LoadEvent& e = result.load_events[i];
    if (std::abs(e.time_s - loads[i].at("time_s").get<double>()) > tol ||
        e.adapter_id != loads[i].at("adapter_id").get<int>() ||
        e.rank != loads[i].at("rank").get<int>() ||
        to_string(e.source) != loads[i].at("source").get<std::string>() ||
        std::abs(e.latency_s - loads[i].at("latency_s").get<double>()) > tol)
      return fail("load event " + std::to_string(i) + " differs");
  }
  for (const json& want : expected.at("requests")) {
    const RequestState& r = result.requests[want.at("request_id").get<std::size_t>()];
    if (r.phase != Phase::Finished) return fail("request did not finish");
    if (r.preemption_count != want.at("preemptions").get<int>())
      return fail("preemption count differs");
    const double ttft = *r.first_token_time_s - r.request.arrival_time_s;
    if (std::abs(ttft - want.at("ttft_s").get<double>()) > tol) return fail("ttft differs");
    if (std::abs(r.completion_time_s - want.at("completion_s").get<double>()) > tol)
      return fail("completion differs");
    const json& emits = want.at("emit_times_s");
    if (emits.size() != r.token_emit_times_s.size()) return fail("emit count differs");
    for (std::size_t t = 0; t < emits.size(); ++t)
      if (std::abs(r.token_emit_times_s[t] - emits[t].get<double>()) > tol)
        return fail("emit time differs");
  }
  return pass("six-request script reproduces the precomputed timeline (" +
              std::to_string(result.iterations) + " iterations, " +
              std::to_string(result.load_events.size()) + " loads) to 1e-9");
}

// --- criterion 5: two-region placement curve --------------------------------

Outcome criterion5() {
  StopWatch watch;
  const double kRatePerAdapter = 0.2;
  const double kDuration = 240.0;

  Condition condition;
  condition.mix = {{.rank = 8, .rate = kRatePerAdapter}};
  condition.lengths = LengthSpec::mean(64.0, 0.0, 128.0, 0.0);

  SweepGrid grid;
  grid.n_values = {4, 8, 16, 32, 64, 128};

  SweepOptions options;
  options.early_exit = false;  // the full curve is the point here
  options.jobs = 1;

  const PlacementResult result =
      sweep_optimal(condition, h100_like_config(1), grid, kDuration, 17, options);

  // Per-N verdict: served if any slot count avoids starvation; best
  // throughput among those.
  std::map<int, std::pair<bool, double>> per_n;  // n -> (served, best tput)
  for (const FrontierPoint& p : result.frontier) {
    if (p.skipped) continue;
    auto& [served, best] = per_n[p.n];
    if (!p.starved) {
      served = true;
      best = std::max(best, p.throughput_tok_s);
    }
  }
  if (per_n.size() != grid.n_values.size()) return fail("sweep skipped part of the grid");

  std::vector<int> served_n;
  bool seen_starved = false;
  for (int n : grid.n_values) {
    const auto& [served, best] = per_n.at(n);
    if (served && seen_starved)
      return fail("starvation not sticky: N=" + std::to_string(n) +
                  " recovers after a starved smaller N");
    if (!served) seen_starved = true;
    if (served) served_n.push_back(n);
  }
  if (served_n.empty()) return fail("every N starved; no rising region");
  if (!seen_starved) return fail("no N starved; no second region");
  double prev = -1.0;
  for (int n : served_n) {
    const double tput = per_n.at(n).second;
    if (tput <= prev)
      return fail("throughput not strictly increasing at N=" + std::to_string(n));
    prev = tput;
  }
  return pass("throughput rises " + fmt(per_n.at(served_n.front()).second, 1) + " -> " +
              fmt(prev, 1) + " tok/s over N=" + std::to_string(served_n.front()) + ".." +
              std::to_string(served_n.back()) + ", then starvation is sticky through N=" +
              std::to_string(grid.n_values.back()) + " (" + fmt(watch.seconds(), 1) + "s)");
}

// --- criterion 6: one slot, three adapters, two rates -----------------------

Outcome criterion6() {
  StopWatch watch;
  const double kDuration = 300.0;

  auto starved_at = [&](double rate) {
    WorkloadSpec workload;
    for (int a = 1; a <= 3; ++a)
      workload.adapters.push_back({.adapter_id = a, .rank = 8, .rate = rate, .lengths = {}});
    workload.lengths = LengthSpec::mean(128.0, 0.0, 231.0, 0.0);
    workload.duration_s = kDuration;
    workload.seed = 29;
    const SimulationResult result =
        run_simulation(workload, h100_like_config(1), LengthMode::Mean, {});
    return compute_metrics(result, workload).starved;
  };

  const bool high = starved_at(1.0);
  const bool low = starved_at(0.1);
  if (!high) return fail("1 req/s per adapter did not starve a single slot");
  if (low) return fail("0.1 req/s per adapter starved despite the light load");
  return pass("three adapters on one slot: starved at 1 req/s each, healthy at 0.1 req/s (" +
              fmt(watch.seconds(), 1) + "s)");
}

// --- criterion 7: least-squares coefficient recovery ------------------------

Outcome criterion7() {
  const std::vector<double> truth{2e-4, 3e-5, 1.5e-3};
  std::vector<std::vector<double>> features;
  std::vector<double> clean;
  RngStream rng(7, {stream_id::kNoise, 1});
  for (int i = 0; i < 400; ++i) {
    const double f0 = 1.0 + rng.uniform01() * 50.0;
    const double f1 = rng.uniform01() * 200.0;
    const double f2 = 0.5 + rng.uniform01() * 10.0;
    features.push_back({f0, f1, f2});
    clean.push_back(truth[0] * f0 + truth[1] * f1 + truth[2] * f2);
  }

  const std::vector<double> exact = fit_linear(features, clean, {"c0", "c1", "c2"});
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double rel = std::abs(exact[i] - truth[i]) / std::abs(truth[i]);
    if (rel > 1e-9)
      return fail("noiseless c" + std::to_string(i) + " off by " + std::to_string(rel));
  }

  std::vector<double> noisy = clean;
  RngStream noise(7, {stream_id::kNoise, 2});
  for (double& y : noisy) y += 0.05 * y * noise.normal();
  const std::vector<double> fitted = fit_linear(features, noisy, {"c0", "c1", "c2"});
  double worst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    worst = std::max(worst, std::abs(fitted[i] - truth[i]) / std::abs(truth[i]));
  if (worst > 0.05)
    return fail("noisy recovery off by " + fmt(100.0 * worst, 2) + "% (> 5%)");
  return pass("noiseless fit exact to 1e-9; 5% multiplicative noise recovered within " +
              fmt(100.0 * worst, 2) + "%");
}

// --- criterion 8: desk-scale predictor pipeline -----------------------------

Outcome criterion8() {
  StopWatch watch;

  DatasetSpec spec;
  spec.rates = {1.6, 0.8, 0.4, 0.1, 0.05, 0.025, 0.0125, 0.00625};
  spec.ranks = {8, 16, 32};
  spec.triple_size = 3;
  spec.condition_stride = 1;
  spec.lengths = LengthSpec::mean(16.0, 0.0, 32.0, 0.0);
  spec.duration_s = 600.0;
  spec.seed = 5;
  // N reaches into the starved region so n* varies (the heavy mixes starve
  // at N=32/64); a single G column keeps the sweep affordable, clamping to
  // min(N, 8) across the small-N rows.
  spec.grid.n_values = {1, 2, 4, 8, 16, 32, 64};
  spec.grid.g_mode = SweepGrid::GMode::Explicit;
  spec.grid.g_values = {8};
  spec.sweep.early_exit = true;
  spec.sweep.early_exit_k = 2;
  spec.sweep.jobs = 1;

  const std::string csv = tmp("desk_dataset.csv");
  const DatasetProgress progress = generate_dataset(spec, h100_like_config(1), csv,
                                                    [](const std::string&) {});
  if (progress.failed != 0) return fail(std::to_string(progress.failed) + " conditions failed");
  const std::vector<DatasetRow> rows = read_dataset_csv(csv);
  if (rows.size() < 1000)
    return fail("only " + std::to_string(rows.size()) + " dataset rows (< 1000)");

  const DatasetSplit split = split_by_hash(rows, 0.10);
  std::vector<DatasetRow> train_rows, test_rows;
  for (std::size_t i : split.train_indices)
    if (!rows[i].all_starved) train_rows.push_back(rows[i]);
  for (std::size_t i : split.test_indices)
    if (!rows[i].all_starved) test_rows.push_back(rows[i]);
  if (test_rows.size() < 30) return fail("holdout too small: " + std::to_string(test_rows.size()));

  ForestParams params;
  params.n_trees = 10;
  params.tree.max_depth = 5;
  params.tree.min_leaf = 2;
  const PlacementModel model = train_placement_model(train_rows, params, 5, false);

  std::vector<WorkloadFeatures> x;
  std::vector<double> y_n;
  for (const DatasetRow& row : train_rows) {
    x.push_back(row.features);
    y_n.push_back(static_cast<double>(row.n_star));
  }
  const LinearBaseline linear_n = fit_linear_baseline(x, y_n);

  std::vector<double> tput_pred, tput_true, n_pred, n_true, n_linear;
  for (const DatasetRow& row : test_rows) {
    tput_pred.push_back(model.throughput.predict(row.features));
    tput_true.push_back(row.max_throughput_tok_s);
    n_pred.push_back(model.n_star.predict(row.features));
    n_true.push_back(static_cast<double>(row.n_star));
    n_linear.push_back(std::max(1.0, std::round(linear_n.predict(row.features))));
  }
  const double tput_smape = evaluate_predictions(tput_pred, tput_true).smape;
  const double n_smape = evaluate_predictions(n_pred, n_true).smape;
  const double n_linear_smape = evaluate_predictions(n_linear, n_true).smape;

  if (tput_smape > 10.0)
    return fail("held-out throughput smape " + fmt(tput_smape, 2) + "% (> 10%)");
  if (n_smape > 8.0)
    return fail("held-out n* smape " + fmt(n_smape, 2) + "% (> 8%)");
  if (n_linear_smape < 2.0 * n_smape)
    return fail("linear baseline too close on n*: " + fmt(n_linear_smape, 2) + "% vs forest " +
                fmt(n_smape, 2) + "%");
  return pass(std::to_string(rows.size()) + " rows, " + std::to_string(test_rows.size()) +
              " held out: throughput smape " + fmt(tput_smape, 2) + "% (<=10), n* smape " +
              fmt(n_smape, 2) + "% (<=8), linear n* " + fmt(n_linear_smape, 2) + "% (" +
              fmt(watch.seconds(), 0) + "s)");
}

// --- criterion 9: prediction latency ----------------------------------------

Outcome criterion9() {
  RngStream rng(9, {77});
  std::vector<DatasetRow> rows;
  for (int i = 0; i < 1000; ++i) {
    DatasetRow row;
    for (double& v : row.features.values) v = rng.uniform01() * 10.0;
    row.max_throughput_tok_s = rng.uniform01() * 500.0;
    row.n_star = 1 + static_cast<int>(rng.uniform_below(64));
    row.g_star = 1 + static_cast<int>(rng.uniform_below(16));
    row.condition_hash = rng.next_u64();
    rows.push_back(row);
  }
  ForestParams params;
  params.n_trees = 10;
  params.tree.max_depth = 5;
  const PlacementModel model = train_placement_model(rows, params, 9, false);

  std::vector<WorkloadFeatures> probes(256);
  for (WorkloadFeatures& p : probes)
    for (double& v : p.values) v = rng.uniform01() * 10.0;

  const int kCalls = 100'000;
  double sink = 0.0;
  StopWatch watch;
  for (int i = 0; i < kCalls; ++i) {
    const PlacementModel::Prediction p =
        model.predict(probes[static_cast<std::size_t>(i) % probes.size()]);
    sink += p.throughput_tok_s + p.n_star + p.g_star;
  }
  const double mean_ms = watch.seconds() * 1000.0 / kCalls;

  if (!(sink > 0.0)) return fail("degenerate predictions");
  if (mean_ms > 0.5) return fail("mean predict latency " + fmt(mean_ms, 4) + " ms (> 0.5 ms)");
  return pass("mean predict latency " + fmt(mean_ms, 4) + " ms over " + std::to_string(kCalls) +
              " calls (budget 0.5 ms)");
}

// --- criterion 10: simulation speed -----------------------------------------

Outcome criterion10() {
  WorkloadSpec workload;
  for (int a = 1; a <= 64; ++a)
    workload.adapters.push_back({.adapter_id = a, .rank = 8, .rate = 1.0 / 64.0, .lengths = {}});
  workload.lengths = LengthSpec::mean(128.0, 32.0, 231.0, 64.0);
  workload.duration_s = 3600.0;
  workload.seed = 10;

  StopWatch watch;
  const SimulationResult result =
      run_simulation(workload, h100_like_config(8), LengthMode::Mean, {});
  const double wall = watch.seconds();
  const MetricsSummary metrics = compute_metrics(result, workload);

  if (result.truncated) return fail("simulation hit the iteration cap");
  if (wall > 60.0) return fail("one simulated hour took " + fmt(wall, 1) + "s (> 60s)");
  return pass("one simulated hour, 64 adapters, ~1 req/s aggregate: " + fmt(wall, 1) +
              "s wall, " + std::to_string(result.iterations) + " iterations, " +
              fmt(metrics.throughput_tok_s, 1) + " tok/s");
}

// --- criterion 11: forest structural properties -----------------------------

int tree_depth(const DecisionTree& tree, int node, int depth) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.feature_index < 0) return depth;
  return std::max(tree_depth(tree, n.left, depth + 1), tree_depth(tree, n.right, depth + 1));
}

Outcome criterion11() {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RngStream rng(seed, {11});
    const std::size_t n = 40 + rng.uniform_below(161);  // 40..200 rows
    std::vector<WorkloadFeatures> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (double& v : x[i].values) v = rng.uniform01() * 8.0;
      y[i] = 3.0 * x[i].values[2] - x[i].values[7] + rng.normal(0.0, 0.5);
    }

    // Depth bound.
    ForestParams params;
    params.n_trees = 6;
    params.tree.max_depth = 4;
    params.tree.min_leaf = 1;
    const ForestModel forest = train_forest(x, y, PredictTarget::Throughput, params, seed);
    for (const DecisionTree& tree : forest.trees)
      if (tree_depth(tree, 0, 0) > params.tree.max_depth)
        return fail("tree exceeds max_depth (seed " + std::to_string(seed) + ")");

    // Averaging property: the forest's training MSE never exceeds the worst
    // single tree's.
    double forest_mse = 0.0;
    std::vector<double> tree_mse(forest.trees.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = forest.predict_raw(x[i]);
      forest_mse += (f - y[i]) * (f - y[i]);
      for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        const double p = forest.trees[t].predict(x[i].values);
        tree_mse[t] += (p - y[i]) * (p - y[i]);
      }
    }
    const double worst_tree = *std::max_element(tree_mse.begin(), tree_mse.end());
    if (forest_mse > worst_tree + 1e-9)
      return fail("forest training error exceeds the worst tree (seed " + std::to_string(seed) +
                  ")");

    // Split-oracle equivalence: the root split of a depth-1 tree matches an
    // exhaustive search over every feature and midpoint threshold.
    TreeParams stump_params;
    stump_params.max_depth = 1;
    stump_params.min_leaf = 1;
    const DecisionTree stump = train_tree(x, y, stump_params);
    if (stump.nodes[0].feature_index < 0) return fail("stump refused to split");

    double best_sse = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      std::vector<double> values;
      for (const WorkloadFeatures& row : x) values.push_back(row.values[f]);
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
      for (std::size_t v = 1; v < sorted.size(); ++v) {
        const double threshold = (sorted[v - 1] + sorted[v]) / 2.0;
        double sum_l = 0.0, sum_r = 0.0;
        std::size_t n_l = 0, n_r = 0;
        for (std::size_t i = 0; i < n; ++i)
          (values[i] <= threshold ? (sum_l += y[i], ++n_l) : (sum_r += y[i], ++n_r));
        if (n_l == 0 || n_r == 0) continue;
        const double mean_l = sum_l / static_cast<double>(n_l);
        const double mean_r = sum_r / static_cast<double>(n_r);
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double mean = values[i] <= threshold ? mean_l : mean_r;
          sse += (y[i] - mean) * (y[i] - mean);
        }
        if (sse < best_sse - 1e-12) {
          best_sse = sse;
          best_feature = static_cast<int>(f);
          best_threshold = threshold;
        }
      }
    }
    if (stump.nodes[0].feature_index != best_feature ||
        std::abs(stump.nodes[0].threshold - best_threshold) > 1e-9)
      return fail("root split differs from the brute-force optimum (seed " +
                  std::to_string(seed) + ")");
  }

  // Serialization: save -> load -> predict is bit-identical.
  RngStream rng(6, {12});
  std::vector<DatasetRow> rows;
  for (int i = 0; i < 300; ++i) {
    DatasetRow row;
    for (double& v : row.features.values) v = rng.uniform01() * 4.0;
    row.max_throughput_tok_s = rng.uniform01() * 100.0;
    row.n_star = 1 + static_cast<int>(rng.uniform_below(32));
    row.g_star = 1 + static_cast<int>(rng.uniform_below(8));
    row.condition_hash = rng.next_u64();
    rows.push_back(row);
  }
  ModelBundle bundle;
  bundle.model = train_placement_model(rows, {}, 6, false);
  const ModelBundle back = model_bundle_from_json(model_bundle_to_json(bundle));
  for (int i = 0; i < 1000; ++i) {
    WorkloadFeatures probe;
    for (double& v : probe.values) v = rng.uniform01() * 4.0;
    if (bundle.model.throughput.predict_raw(probe) != back.model.throughput.predict_raw(probe) ||
        bundle.model.n_star.predict_raw(probe) != back.model.n_star.predict_raw(probe) ||
        bundle.model.g_star.predict_raw(probe) != back.model.g_star.predict_raw(probe))
      return fail("serialized model predicts differently on probe " + std::to_string(i));
  }

  return pass("depth bound, forest-vs-worst-tree error, brute-force split equivalence (5 seeds) "
              "and bit-identical serialization on 1000 probes");
}

// --- criterion 12: smape closed forms and bounds ----------------------------

Outcome criterion12() {
  if (smape({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) != 0.0) return fail("identical series != 0");
  if (std::abs(smape({3.0}, {1.0}) - 100.0) > 1e-12) return fail("[3] vs [1] != 100");
  if (smape({0.0}, {0.0}) != 0.0) return fail("zero pair != 0");

  RngStream rng(12, {5});
  for (int i = 0; i < 10'000; ++i) {
    const std::size_t len = 1 + rng.uniform_below(4);
    std::vector<double> a(len), b(len);
    for (std::size_t k = 0; k < len; ++k) {
      // Mix signs and exact zeros into the draw.
      a[k] = (rng.uniform_below(8) == 0) ? 0.0 : (rng.uniform01() - 0.5) * 100.0;
      b[k] = (rng.uniform_below(8) == 0) ? 0.0 : (rng.uniform01() - 0.5) * 100.0;
    }
    const double ab = smape(a, b);
    const double ba = smape(b, a);
    if (ab != ba) return fail("smape asymmetric on pair " + std::to_string(i));
    if (ab < 0.0 || ab > 200.0 + 1e-9)
      return fail("smape out of [0, 200] on pair " + std::to_string(i));
  }
  return pass("closed-form cases exact; symmetric and within [0, 200] on 10000 random pairs");
}

// --- driver -----------------------------------------------------------------

struct Criterion {
  int number;
  const char* title;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "determinism across repeats and job counts", criterion1},
      {2, "conservation and lifecycle invariants", criterion2},
      {3, "analytic single-flow oracle", criterion3},
      {4, "hand-traced scheduling oracle", criterion4},
      {5, "two-region placement curve", criterion5},
      {6, "single-slot starvation flips with rate", criterion6},
      {7, "least-squares coefficient recovery", criterion7},
      {8, "desk-scale predictor pipeline", criterion8},
      {9, "prediction latency budget", criterion9},
      {10, "simulation speed budget", criterion10},
      {11, "forest structural properties", criterion11},
      {12, "smape closed forms and bounds", criterion12},
  };
  return all;
}

int run_criterion(const Criterion& c) {
  Outcome outcome;
  try {
    outcome = c.run();
  } catch (const std::exception& e) {
    outcome = fail(std::string("unexpected exception: ") + e.what());
  }
  std::printf("%s criterion %d: %s — %s\n", outcome.pass ? "PASS" : "FAIL", c.number, c.title,
              outcome.detail.c_str());
  std::fflush(stdout);
  return outcome.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }
  if (selected != 0) {
    for (const Criterion& c : criteria())
      if (c.number == selected) return run_criterion(c);
    std::fprintf(stderr, "unknown criterion %d\n", selected);
    return 2;
  }
  int failures = 0;
  for (const Criterion& c : criteria()) failures += run_criterion(c);
  return failures == 0 ? 0 : 1;
}
