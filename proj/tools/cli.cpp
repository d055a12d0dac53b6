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

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "loratwin/engine.hpp"
#include "loratwin/errors.hpp"
#include "loratwin/estimators.hpp"
#include "loratwin/json_io.hpp"
#include "loratwin/metrics.hpp"
#include "loratwin/placement.hpp"
#include "loratwin/predictor.hpp"
#include "loratwin/server_config.hpp"

namespace loratwin::cli {

namespace {

using nlohmann::json;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
}

ServerConfig make_preset(const std::string& name) {
  if (name == "h100_like") return h100_like_config(1);
  throw ValidationError("unknown preset \"" + name + "\" (available: h100_like)");
}

// --config beats --preset beats $LORATWIN_CONFIG.
ServerConfig resolve_config(const std::string& config_path, const std::string& preset,
                            std::optional<int> slots_override) {
  ServerConfig config;
  if (!config_path.empty()) {
    config = load_server_config(config_path);
  } else if (!preset.empty()) {
    config = make_preset(preset);
  } else if (const char* env = std::getenv("LORATWIN_CONFIG"); env && *env) {
    config = load_server_config(env);
  } else {
    throw ValidationError(
        "no server config given (use --config FILE, --preset NAME or set LORATWIN_CONFIG)");
  }
  if (slots_override) config.slots = *slots_override;
  config.validate();
  return config;
}

LengthMode parse_mode(const std::string& mode) {
  if (mode == "full") return LengthMode::Full;
  if (mode == "mean") return LengthMode::Mean;
  throw ValidationError("--mode: expected \"full\" or \"mean\", got \"" + mode + "\"");
}

struct StopWatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report_wall_time(const char* what, const StopWatch& watch) {
  std::fprintf(stderr, "%s took %.2fs (wall)\n", what, watch.seconds());
}

// --- tiny CSV reader (for `fit` inputs) -----------------------------------

struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ValidationError(path + ": missing column \"" + name + "\"");
    return static_cast<std::size_t>(it - header.begin());
  }

  double number(std::size_t row, std::size_t col) const {
    try {
      return std::stod(rows[row][col]);
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(row + 2) + ": \"" + rows[row][col] +
                            "\" is not a number");
    }
  }
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    // Trim surrounding whitespace.
    const auto from = field.find_first_not_of(" \t\r");
    const auto to = field.find_last_not_of(" \t\r");
    fields.push_back(from == std::string::npos ? "" : field.substr(from, to - from + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

CsvTable read_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  CsvTable table;
  table.path = path;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty CSV");
  table.header = split_fields(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (fields.size() != table.header.size())
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  return table;
}

// --- simulate --------------------------------------------------------------

struct SimulateOpts {
  std::string workload_path, config_path, preset, mode, out_path;
  std::string scenario_out, scenario_key;
  std::optional<int> slots;
  std::optional<std::uint64_t> seed;
  bool include_requests = false;
  bool trace = false;
  bool wall_time = false;
  bool check_invariants = false;
};

int run_simulate(const SimulateOpts& opts) {
  WorkloadSpec workload = load_workload(opts.workload_path);
  if (opts.seed) workload.seed = *opts.seed;
  const ServerConfig config = resolve_config(opts.config_path, opts.preset, opts.slots);
  const LengthMode mode = opts.mode.empty() ? workload.lengths.mode : parse_mode(opts.mode);

  SimOptions sim_options;
  sim_options.check_invariants = opts.check_invariants;
  sim_options.record_iteration_trace = opts.trace;

  StopWatch watch;
  const SimulationResult result = run_simulation(workload, config, mode, sim_options);
  const MetricsSummary metrics = compute_metrics(result, workload, config.ideal_includes_input);
  report_wall_time("simulate", watch);

  SimulationReportOptions report;
  report.include_requests = opts.include_requests;
  report.include_trace = opts.trace;
  report.include_wall_time = opts.wall_time;
  emit(simulation_report_json(result, metrics, report), opts.out_path);

  if (!opts.scenario_out.empty()) {
    ScenarioMetrics scenario;
    scenario.key = opts.scenario_key;
    scenario.throughput_tok_s = metrics.throughput_tok_s;
    scenario.itl_mean_s = metrics.itl_mean_s;
    scenario.ttft_mean_s = metrics.ttft_mean_s;
    write_text_file(opts.scenario_out, scenarios_to_json({scenario}));
  }
  if (result.truncated) {
    std::fprintf(stderr, "warning: simulation hit the iteration cap; results are partial\n");
  }
  return 0;
}

// --- sweep ------------------------------------------------------------------

struct SweepOpts {
  std::string condition_path, config_path, preset, out_path;
  std::vector<int> n_values;
  std::string g_mode = "geometric";
  std::vector<int> g_values;
  double duration_s = 600.0;
  std::uint64_t seed = 0;
  bool no_early_exit = false;
  int early_exit_k = 3;
  int jobs = 1;
  std::string mode = "mean";
};

int run_sweep(const SweepOpts& opts) {
  const Condition condition = load_condition(opts.condition_path);
  const ServerConfig config = resolve_config(opts.config_path, opts.preset, std::nullopt);

  SweepGrid grid;
  grid.n_values = opts.n_values;
  if (opts.g_mode == "geometric") {
    grid.g_mode = SweepGrid::GMode::Geometric;
  } else if (opts.g_mode == "explicit") {
    grid.g_mode = SweepGrid::GMode::Explicit;
    grid.g_values = opts.g_values;
  } else {
    throw ValidationError("--g-mode: expected \"geometric\" or \"explicit\"");
  }

  SweepOptions options;
  options.early_exit = !opts.no_early_exit;
  options.early_exit_k = opts.early_exit_k;
  options.jobs = opts.jobs;
  options.mode = parse_mode(opts.mode);

  StopWatch watch;
  const PlacementResult result =
      sweep_optimal(condition, config, grid, opts.duration_s, opts.seed, options);
  report_wall_time("sweep", watch);

  emit(placement_result_to_json(result), opts.out_path);
  return 0;
}

// --- gen-dataset ------------------------------------------------------------

struct GenDatasetOpts {
  std::string spec_path, config_path, preset, out_csv;
  std::optional<int> jobs;
  std::optional<int> stride;
};

int run_gen_dataset(const GenDatasetOpts& opts) {
  DatasetSpec spec = load_dataset_spec(opts.spec_path);
  if (opts.jobs) spec.sweep.jobs = *opts.jobs;
  if (opts.stride) spec.condition_stride = *opts.stride;
  const ServerConfig config = resolve_config(opts.config_path, opts.preset, std::nullopt);

  StopWatch watch;
  const DatasetProgress progress = generate_dataset(
      spec, config, opts.out_csv,
      [](const std::string& message) { std::fprintf(stderr, "error: %s\n", message.c_str()); });
  report_wall_time("gen-dataset", watch);

  std::fprintf(stderr, "dataset: %zu/%zu conditions done, %zu failed -> %s\n",
               progress.completed, progress.total_conditions, progress.failed,
               opts.out_csv.c_str());
  return progress.failed == 0 ? 0 : 1;
}

// --- train ------------------------------------------------------------------

struct TrainOpts {
  std::string data_csv, out_path;
  int trees = 10;
  int depth = 5;
  std::size_t min_leaf = 2;
  std::size_t feature_subset = kNumFeatures;
  std::uint64_t seed = 0;
  double test_fraction = 0.1;
  bool include_starved = false;
  bool no_baseline = false;
};

struct EvalLine {
  std::string target, set, predictor;
  RegressionEval eval;
};

void print_eval_table(const std::vector<EvalLine>& lines) {
  std::printf("%-11s %-6s %-7s %6s %12s %12s %9s\n", "target", "set", "model", "n", "mae",
              "rmse", "smape%");
  for (const EvalLine& line : lines) {
    std::printf("%-11s %-6s %-7s %6zu %12.4f %12.4f %9.2f\n", line.target.c_str(),
                line.set.c_str(), line.predictor.c_str(), line.eval.n, line.eval.mae,
                line.eval.rmse, line.eval.smape);
  }
}

// Applies the same output discipline the forests use, so the baseline
// competes on equal terms.
double clamp_target(PredictTarget target, double raw) {
  if (target == PredictTarget::Throughput) return std::max(raw, 0.0);
  return std::max(1.0, std::round(raw));
}

int run_train(const TrainOpts& opts) {
  const std::vector<DatasetRow> rows = read_dataset_csv(opts.data_csv);
  if (rows.empty()) throw ValidationError(opts.data_csv + ": dataset has no rows");

  const DatasetSplit split = split_by_hash(rows, opts.test_fraction);
  auto usable = [&](const DatasetRow& row) { return opts.include_starved || !row.all_starved; };

  std::vector<DatasetRow> train_rows;
  for (std::size_t i : split.train_indices)
    if (usable(rows[i])) train_rows.push_back(rows[i]);
  std::vector<DatasetRow> test_rows;
  for (std::size_t i : split.test_indices)
    if (usable(rows[i])) test_rows.push_back(rows[i]);
  if (train_rows.empty())
    throw ValidationError("no trainable rows after the starved filter and holdout split");

  ForestParams params;
  params.n_trees = opts.trees;
  params.tree.max_depth = opts.depth;
  params.tree.min_leaf = opts.min_leaf;
  params.tree.feature_subset = opts.feature_subset;

  StopWatch watch;
  ModelBundle bundle;
  bundle.model = train_placement_model(train_rows, params, opts.seed, /*exclude_starved=*/false);
  bundle.dataset_rows = rows.size();
  bundle.trained_rows = bundle.model.throughput.trained_rows;
  bundle.test_fraction = opts.test_fraction;
  bundle.seed = opts.seed;

  std::vector<WorkloadFeatures> x;
  for (const DatasetRow& row : train_rows) x.push_back(row.features);
  const auto targets = {PredictTarget::Throughput, PredictTarget::NStar, PredictTarget::GStar};
  if (!opts.no_baseline) {
    for (PredictTarget target : targets) {
      std::vector<double> y;
      for (const DatasetRow& row : train_rows) y.push_back(target_value(row, target));
      try {
        const LinearBaseline baseline = fit_linear_baseline(x, y);
        if (target == PredictTarget::Throughput) bundle.linear_throughput = baseline;
        if (target == PredictTarget::NStar) bundle.linear_n_star = baseline;
        if (target == PredictTarget::GStar) bundle.linear_g_star = baseline;
      } catch (const FitError& e) {
        std::fprintf(stderr, "warning: linear baseline for %s skipped: %s\n",
                     to_string(target).c_str(), e.what());
      }
    }
  }
  report_wall_time("train", watch);

  std::vector<EvalLine> table;
  auto eval_set = [&](const std::vector<DatasetRow>& set, const std::string& set_name) {
    if (set.empty()) return;
    for (PredictTarget target : targets) {
      const ForestModel& forest = target == PredictTarget::Throughput ? bundle.model.throughput
                                  : target == PredictTarget::NStar    ? bundle.model.n_star
                                                                      : bundle.model.g_star;
      const std::optional<LinearBaseline>& baseline =
          target == PredictTarget::Throughput ? bundle.linear_throughput
          : target == PredictTarget::NStar    ? bundle.linear_n_star
                                              : bundle.linear_g_star;
      std::vector<double> actual, forest_pred, linear_pred;
      for (const DatasetRow& row : set) {
        actual.push_back(target_value(row, target));
        forest_pred.push_back(forest.predict(row.features));
        if (baseline) linear_pred.push_back(clamp_target(target, baseline->predict(row.features)));
      }
      table.push_back({to_string(target), set_name, "forest", evaluate_predictions(forest_pred, actual)});
      if (baseline)
        table.push_back(
            {to_string(target), set_name, "linear", evaluate_predictions(linear_pred, actual)});
    }
  };
  eval_set(train_rows, "train");
  eval_set(test_rows, "test");
  print_eval_table(table);

  write_text_file(opts.out_path, model_bundle_to_json(bundle));
  std::fprintf(stderr, "model written to %s (%zu trained rows, %zu test rows)\n",
               opts.out_path.c_str(), bundle.trained_rows, test_rows.size());
  return 0;
}

// --- predict ----------------------------------------------------------------

struct PredictOpts {
  std::string model_path, condition_path, out_path;
  bool show_baseline = false;
};

int run_predict(const PredictOpts& opts) {
  const ModelBundle bundle = load_model_bundle(opts.model_path);
  const Condition condition = load_condition(opts.condition_path);
  const WorkloadFeatures features = encode_workload(condition);
  const PlacementModel::Prediction prediction = bundle.model.predict(features);

  json j;
  j["schema"] = "loratwin.prediction.v1";
  json fj;
  const auto& names = WorkloadFeatures::names();
  for (std::size_t i = 0; i < kNumFeatures; ++i) fj[names[i]] = features.values[i];
  j["features"] = std::move(fj);
  j["prediction"] = {{"throughput_tok_s", prediction.throughput_tok_s},
                     {"n_star", prediction.n_star},
                     {"g_star", prediction.g_star}};
  if (opts.show_baseline) {
    if (!bundle.linear_throughput && !bundle.linear_n_star && !bundle.linear_g_star)
      throw ValidationError("model file carries no linear baselines (retrain without --no-baseline)");
    json bj;
    if (bundle.linear_throughput)
      bj["throughput_tok_s"] = std::max(bundle.linear_throughput->predict(features), 0.0);
    if (bundle.linear_n_star)
      bj["n_star"] =
          static_cast<int>(clamp_target(PredictTarget::NStar, bundle.linear_n_star->predict(features)));
    if (bundle.linear_g_star)
      bj["g_star"] =
          static_cast<int>(clamp_target(PredictTarget::GStar, bundle.linear_g_star->predict(features)));
    j["linear_baseline"] = std::move(bj);
  }
  emit(j.dump(2) + "\n", opts.out_path);
  return 0;
}

// --- rules ------------------------------------------------------------------

struct RulesOpts {
  std::string model_path, target = "throughput", out_path;
  int tree = 0;
  bool all_trees = false;
  int precision = 4;
};

int run_rules(const RulesOpts& opts) {
  const ModelBundle bundle = load_model_bundle(opts.model_path);
  const PredictTarget target = predict_target_from_string(opts.target);
  const ForestModel& forest = target == PredictTarget::Throughput ? bundle.model.throughput
                              : target == PredictTarget::NStar    ? bundle.model.n_star
                                                                  : bundle.model.g_star;
  const int n_trees = static_cast<int>(forest.trees.size());
  int first = opts.tree, last = opts.tree + 1;
  if (opts.all_trees) {
    first = 0;
    last = n_trees;
  } else if (opts.tree < 0 || opts.tree >= n_trees) {
    throw ValidationError("--tree: index " + std::to_string(opts.tree) + " out of range [0, " +
                          std::to_string(n_trees) + ")");
  }

  std::ostringstream out;
  const auto& names = WorkloadFeatures::names();
  for (int t = first; t < last; ++t) {
    out << "# target " << to_string(target) << ", tree " << t << "/" << n_trees
        << " (trained on " << forest.trained_rows << " rows)\n";
    for (const Rule& rule : extract_rules(forest.trees[static_cast<std::size_t>(t)]))
      out << format_rule(rule, names, opts.precision) << "\n";
  }
  emit(out.str(), opts.out_path);
  return 0;
}

// --- compare ----------------------------------------------------------------

struct CompareOpts {
  std::string dt_path, real_path, out_path;
};

int run_compare(const CompareOpts& opts) {
  const std::vector<ScenarioMetrics> dt = load_scenarios(opts.dt_path);
  const std::vector<ScenarioMetrics> real = load_scenarios(opts.real_path);
  const CompareReport report = compare_traces(dt, real);
  emit(compare_report_to_json(report), opts.out_path);
  for (const std::string& key : report.unmatched_keys)
    std::fprintf(stderr, "warning: unmatched scenario %s\n", key.c_str());
  return 0;
}

// --- fit --------------------------------------------------------------------

struct FitOpts {
  std::string model_csv, sched_csv, adapters_csv, load_csv;
  std::string base_path, preset, out_path;
  std::optional<int> slots;
  std::optional<std::int64_t> kv_budget;
  std::optional<double> kv_bytes_per_token;
  std::optional<double> slot_cost_rank8;
  std::string slot_cost_table;  // "8=800,16=1700"
  std::optional<double> disk_multiplier;
};

int run_fit(const FitOpts& opts) {
  ServerConfig config;
  if (!opts.base_path.empty()) {
    config = load_server_config(opts.base_path);
  } else if (!opts.preset.empty()) {
    config = make_preset(opts.preset);
  }

  bool fitted_anything = false;

  if (!opts.model_csv.empty()) {
    const CsvTable csv = read_csv(opts.model_csv);
    const std::size_t rc = csv.column("r_running"), lc = csv.column("latency_s");
    std::vector<std::vector<double>> features;
    std::vector<double> observed;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
      features.push_back({csv.number(i, rc), 1.0});
      observed.push_back(csv.number(i, lc));
    }
    const std::vector<double> k = fit_linear(features, observed, {"k4", "k5"});
    config.latency.k4 = k[0];
    config.latency.k5 = k[1];
    fitted_anything = true;
  }

  if (!opts.sched_csv.empty()) {
    const CsvTable csv = read_csv(opts.sched_csv);
    const std::size_t rr = csv.column("r_running"), rw = csv.column("r_waiting"),
                      gc = csv.column("g"), nc = csv.column("n"), lc = csv.column("latency_s");
    std::vector<std::vector<double>> features;
    std::vector<double> observed;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
      const double g = csv.number(i, gc), n = csv.number(i, nc);
      if (n <= 0.0) throw ValidationError(opts.sched_csv + ": n must be > 0");
      const double ratio = std::min(g / n, 1.0);
      features.push_back({csv.number(i, rr), csv.number(i, rw), csv.number(i, rw) * ratio});
      observed.push_back(csv.number(i, lc));
    }
    const std::vector<double> k = fit_linear(features, observed, {"k1", "k2", "k3"});
    config.latency.k1 = k[0];
    config.latency.k2 = k[1];
    config.latency.k3 = k[2];
    fitted_anything = true;
  }

  if (!opts.adapters_csv.empty()) {
    const CsvTable csv = read_csv(opts.adapters_csv);
    const std::size_t ac = csv.column("a_running"), mc = csv.column("multiplier");
    std::vector<std::vector<double>> features;
    std::vector<double> observed;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
      const double a = csv.number(i, ac);
      if (a <= 0.0) continue;  // the a=0 point is pinned at 1.0, not fitted
      features.push_back({a, 1.0});
      observed.push_back(csv.number(i, mc));
    }
    if (features.size() < 2)
      throw ValidationError(opts.adapters_csv + ": need at least two rows with a_running > 0");
    const std::vector<double> k = fit_linear(features, observed, {"k6", "k7"});
    config.latency.k6 = k[0];
    config.latency.k7 = k[1];
    fitted_anything = true;
  }

  if (!opts.load_csv.empty()) {
    const CsvTable csv = read_csv(opts.load_csv);
    const std::size_t rc = csv.column("rank"), sc = csv.column("source"),
                      lc = csv.column("latency_s");
    std::map<int, std::pair<double, int>> cpu_sums;  // rank -> (sum, count)
    std::vector<std::pair<int, double>> disk_rows;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
      const int rank = static_cast<int>(csv.number(i, rc));
      const LoadSource source = load_source_from_string(csv.rows[i][sc]);
      const double latency = csv.number(i, lc);
      if (source == LoadSource::Cpu) {
        auto& [sum, count] = cpu_sums[rank];
        sum += latency;
        count += 1;
      } else {
        disk_rows.emplace_back(rank, latency);
      }
    }
    if (cpu_sums.empty())
      throw ValidationError(opts.load_csv + ": no cpu rows (the table is benchmarked from CPU)");
    config.load.cpu_load_seconds.clear();
    for (const auto& [rank, sum_count] : cpu_sums)
      config.load.cpu_load_seconds[rank] = sum_count.first / sum_count.second;
    if (!disk_rows.empty()) {
      double ratio_sum = 0.0;
      for (const auto& [rank, latency] : disk_rows) {
        const auto it = config.load.cpu_load_seconds.find(rank);
        if (it == config.load.cpu_load_seconds.end())
          throw ValidationError(opts.load_csv + ": disk row for rank " + std::to_string(rank) +
                                " has no cpu counterpart");
        ratio_sum += latency / it->second;
      }
      config.load.disk_multiplier = ratio_sum / static_cast<double>(disk_rows.size());
    }
    fitted_anything = true;
  }

  if (opts.slots) config.slots = *opts.slots;
  if (opts.kv_budget) {
    config.memory.total_kv_budget = *opts.kv_budget;
    fitted_anything = true;
  }
  if (opts.kv_bytes_per_token) config.memory.kv_bytes_per_token = *opts.kv_bytes_per_token;
  if (opts.slot_cost_rank8) {
    config.memory.slot_cost_base_rank8 = *opts.slot_cost_rank8;
    fitted_anything = true;
  }
  if (!opts.slot_cost_table.empty()) {
    for (const std::string& entry : split_fields(opts.slot_cost_table)) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos)
        throw ValidationError("--slot-cost-table: expected RANK=TOKENS entries, got \"" + entry +
                              "\"");
      try {
        config.memory.slot_cost_table[std::stoi(entry.substr(0, eq))] =
            std::stoll(entry.substr(eq + 1));
      } catch (const std::exception&) {
        throw ValidationError("--slot-cost-table: unparsable entry \"" + entry + "\"");
      }
    }
    fitted_anything = true;
  }
  if (opts.disk_multiplier) config.load.disk_multiplier = *opts.disk_multiplier;

  if (!fitted_anything && opts.base_path.empty() && opts.preset.empty())
    throw ValidationError("nothing to fit: pass at least one CSV, memory flag, --base or --preset");

  try {
    config.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("fitted config is incomplete: ") + e.what() +
                          " (provide the missing part via flags or --base)");
  }
  emit(server_config_to_json(config), opts.out_path);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"loratwin: a deterministic digital twin for multi-LoRA serving placement"};
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run one workload through the twin");
  simulate->add_option("--workload", sim.workload_path, "Workload spec JSON")->required();
  simulate->add_option("--config", sim.config_path, "Server config JSON");
  simulate->add_option("--preset", sim.preset, "Built-in config preset (h100_like)");
  simulate->add_option("--slots", sim.slots, "Override config.slots (G)");
  simulate->add_option("--seed", sim.seed, "Override the workload seed");
  simulate->add_option("--mode", sim.mode, "Length sampling: full or mean");
  simulate->add_option("--out", sim.out_path, "Report file (default: stdout)");
  simulate->add_flag("--requests", sim.include_requests, "Include per-request detail");
  simulate->add_flag("--trace", sim.trace, "Record and include the iteration trace");
  simulate->add_flag("--wall-time", sim.wall_time, "Include host wall time in the report");
  simulate->add_flag("--check-invariants", sim.check_invariants,
                     "Verify scheduler invariants every iteration");
  simulate->add_option("--scenario-out", sim.scenario_out,
                       "Also write a reduced scenario file for `compare`");
  CLI::Option* key_opt =
      simulate->add_option("--scenario-key", sim.scenario_key, "Key for --scenario-out");
  simulate->get_option("--scenario-out")->needs(key_opt);
  simulate->callback([&] { run_simulate(sim); });

  SweepOpts sweep;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Find the optimal (N adapters, G slots) placement");
  sweep_cmd->add_option("--condition", sweep.condition_path, "Condition JSON (mix + lengths)")
      ->required();
  sweep_cmd->add_option("--config", sweep.config_path, "Server config JSON");
  sweep_cmd->add_option("--preset", sweep.preset, "Built-in config preset (h100_like)");
  sweep_cmd->add_option("--n", sweep.n_values, "Served-adapter counts, ascending")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--g-mode", sweep.g_mode, "geometric (8,N/4,N/2,N) or explicit");
  sweep_cmd->add_option("--g", sweep.g_values, "Slot counts for --g-mode explicit")
      ->delimiter(',');
  sweep_cmd->add_option("--duration", sweep.duration_s, "Arrival window per point, seconds");
  sweep_cmd->add_option("--seed", sweep.seed, "Workload seed");
  sweep_cmd->add_flag("--no-early-exit", sweep.no_early_exit, "Evaluate the full N grid");
  sweep_cmd->add_option("--early-exit-k", sweep.early_exit_k,
                        "Consecutive non-improving N values before stopping");
  sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads per N row");
  sweep_cmd->add_option("--mode", sweep.mode, "Length sampling: full or mean");
  sweep_cmd->add_option("--out", sweep.out_path, "Result file (default: stdout)");
  sweep_cmd->callback([&] { run_sweep(sweep); });

  GenDatasetOpts gen;
  CLI::App* gen_cmd =
      app.add_subcommand("gen-dataset", "Sweep a condition grid into a training CSV");
  gen_cmd->add_option("--spec", gen.spec_path, "Dataset spec JSON")->required();
  gen_cmd->add_option("--config", gen.config_path, "Server config JSON");
  gen_cmd->add_option("--preset", gen.preset, "Built-in config preset (h100_like)");
  gen_cmd->add_option("--out", gen.out_csv, "Output CSV (appended; resumable)")->required();
  gen_cmd->add_option("--jobs", gen.jobs, "Parallel conditions (overrides the spec)");
  gen_cmd->add_option("--stride", gen.stride, "Condition subsampling stride (overrides the spec)");
  gen_cmd->callback([&] {
    if (run_gen_dataset(gen) != 0)
      throw SimulationError("dataset generation finished with failed conditions");
  });

  TrainOpts train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train placement forests from a dataset CSV");
  train_cmd->add_option("--data", train.data_csv, "Dataset CSV from gen-dataset")->required();
  train_cmd->add_option("--out", train.out_path, "Model bundle JSON")->required();
  train_cmd->add_option("--trees", train.trees, "Trees per forest");
  train_cmd->add_option("--depth", train.depth, "Maximum tree depth");
  train_cmd->add_option("--min-leaf", train.min_leaf, "Minimum rows per leaf");
  train_cmd->add_option("--feature-subset", train.feature_subset, "Features considered per node");
  train_cmd->add_option("--seed", train.seed, "Bootstrap seed");
  train_cmd->add_option("--test-fraction", train.test_fraction,
                        "Hash-based holdout fraction [0, 1)");
  train_cmd->add_flag("--include-starved", train.include_starved,
                      "Keep rows whose whole sweep starved");
  train_cmd->add_flag("--no-baseline", train.no_baseline, "Skip the linear baselines");
  train_cmd->callback([&] { run_train(train); });

  PredictOpts predict;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Predict optimal placement for a condition");
  predict_cmd->add_option("--model", predict.model_path, "Model bundle JSON")->required();
  predict_cmd->add_option("--condition", predict.condition_path, "Condition JSON")->required();
  predict_cmd->add_option("--out", predict.out_path, "Output file (default: stdout)");
  predict_cmd->add_flag("--baseline", predict.show_baseline,
                        "Also report the linear baseline prediction");
  predict_cmd->callback([&] { run_predict(predict); });

  RulesOpts rules;
  CLI::App* rules_cmd = app.add_subcommand("rules", "Print a forest's decision rules");
  rules_cmd->add_option("--model", rules.model_path, "Model bundle JSON")->required();
  rules_cmd->add_option("--target", rules.target, "throughput, n_star or g_star");
  rules_cmd->add_option("--tree", rules.tree, "Tree index (default 0)");
  rules_cmd->add_flag("--all-trees", rules.all_trees, "Print every tree");
  rules_cmd->add_option("--precision", rules.precision, "Digits for thresholds and values");
  rules_cmd->add_option("--out", rules.out_path, "Output file (default: stdout)");
  rules_cmd->callback([&] { run_rules(rules); });

  CompareOpts compare;
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "SMAPE between twin and measured scenario metrics");
  compare_cmd->add_option("--dt", compare.dt_path, "Twin scenario JSON")->required();
  compare_cmd->add_option("--real", compare.real_path, "Measured scenario JSON")->required();
  compare_cmd->add_option("--out", compare.out_path, "Report file (default: stdout)");
  compare_cmd->callback([&] { run_compare(compare); });

  FitOpts fit;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "Fit estimator coefficients from benchmark CSVs");
  fit_cmd->add_option("--model-csv", fit.model_csv, "Columns: r_running, latency_s -> k4, k5");
  fit_cmd->add_option("--sched-csv", fit.sched_csv,
                      "Columns: r_running, r_waiting, g, n, latency_s -> k1..k3");
  fit_cmd->add_option("--adapters-csv", fit.adapters_csv,
                      "Columns: a_running, multiplier -> k6, k7");
  fit_cmd->add_option("--load-csv", fit.load_csv,
                      "Columns: rank, source, latency_s -> load table");
  fit_cmd->add_option("--base", fit.base_path, "Start from this config JSON");
  fit_cmd->add_option("--preset", fit.preset, "Start from a built-in preset");
  fit_cmd->add_option("--slots", fit.slots, "Slot count for the emitted config");
  fit_cmd->add_option("--kv-budget", fit.kv_budget, "memory.total_kv_budget, tokens");
  fit_cmd->add_option("--kv-bytes-per-token", fit.kv_bytes_per_token,
                      "memory.kv_bytes_per_token");
  fit_cmd->add_option("--slot-cost-rank8", fit.slot_cost_rank8,
                      "Linear slot cost: tokens a rank-8 slot displaces");
  fit_cmd->add_option("--slot-cost-table", fit.slot_cost_table,
                      "Explicit slot costs, e.g. 8=800,16=1700");
  fit_cmd->add_option("--disk-multiplier", fit.disk_multiplier, "Disk/CPU load latency ratio");
  fit_cmd->add_option("--out", fit.out_path, "Config file (default: stdout)");
  fit_cmd->callback([&] { run_fit(fit); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const InternalError& e) {
    std::fprintf(stderr, "internal error (please report): %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("loratwin");
  for (const std::string& a : args) argv_storage.push_back(a);
  std::vector<const char*> argv;
  for (const std::string& a : argv_storage) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace loratwin::cli
