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

#include "loratwin/json_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loratwin/errors.hpp"

namespace loratwin {

namespace {

using nlohmann::json;

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("JSON parse error: ") + e.what());
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path + "." + key + ": missing");
  return *it;
}

const json* find(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double as_num(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number");
  return j.get<double>();
}

std::int64_t as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError(path + ": expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t as_uint(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  throw ValidationError(path + ": expected a non-negative integer");
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ValidationError(path + ": expected a boolean");
  return j.get<bool>();
}

std::string as_str(const json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path + ": expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array");
  return j;
}

double num_or(const json& j, const std::string& path, const char* key, double fallback) {
  const json* v = find(j, path, key);
  return v ? as_num(*v, path + "." + key) : fallback;
}

std::int64_t int_or(const json& j, const std::string& path, const char* key,
                    std::int64_t fallback) {
  const json* v = find(j, path, key);
  return v ? as_int(*v, path + "." + key) : fallback;
}

std::uint64_t uint_or(const json& j, const std::string& path, const char* key,
                      std::uint64_t fallback) {
  const json* v = find(j, path, key);
  return v ? as_uint(*v, path + "." + key) : fallback;
}

bool bool_or(const json& j, const std::string& path, const char* key, bool fallback) {
  const json* v = find(j, path, key);
  return v ? as_bool(*v, path + "." + key) : fallback;
}

// Parses the string keys of a rank-indexed JSON object ("8": ...).
int rank_key(const std::string& key, const std::string& path) {
  try {
    std::size_t pos = 0;
    const int rank = std::stoi(key, &pos);
    if (pos != key.size() || rank < 0) throw std::invalid_argument("");
    return rank;
  } catch (const std::exception&) {
    throw ValidationError(path + ": key \"" + key + "\" is not a non-negative rank");
  }
}

// --- LengthSpec -----------------------------------------------------------

LengthSpec length_spec_from(const json& j, const std::string& path) {
  const std::string mode = as_str(require(j, path, "mode"), path + ".mode");
  LengthSpec spec;
  if (mode == "full") {
    const json& pairs = as_array(require(j, path, "pairs"), path + ".pairs");
    std::vector<std::pair<int, int>> list;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string p = path + ".pairs[" + std::to_string(i) + "]";
      const json& pair = as_array(pairs[i], p);
      if (pair.size() != 2) throw ValidationError(p + ": expected [input, output]");
      list.emplace_back(static_cast<int>(as_int(pair[0], p + "[0]")),
                        static_cast<int>(as_int(pair[1], p + "[1]")));
    }
    spec = LengthSpec::full(std::move(list));
  } else if (mode == "mean") {
    spec = LengthSpec::mean(as_num(require(j, path, "mean_input"), path + ".mean_input"),
                            num_or(j, path, "std_input", 0.0),
                            as_num(require(j, path, "mean_output"), path + ".mean_output"),
                            num_or(j, path, "std_output", 0.0));
  } else {
    throw ValidationError(path + ".mode: expected \"full\" or \"mean\", got \"" + mode + "\"");
  }
  spec.validate(path);
  return spec;
}

json length_spec_to(const LengthSpec& spec) {
  json j;
  if (spec.mode == LengthMode::Full) {
    j["mode"] = "full";
    json pairs = json::array();
    for (const auto& [in, out] : spec.full_lengths) pairs.push_back(json::array({in, out}));
    j["pairs"] = std::move(pairs);
  } else {
    j["mode"] = "mean";
    j["mean_input"] = spec.mean_input;
    j["std_input"] = spec.std_input;
    j["mean_output"] = spec.mean_output;
    j["std_output"] = spec.std_output;
  }
  return j;
}

// --- WorkloadSpec ---------------------------------------------------------

WorkloadSpec workload_from(const json& j, const std::string& path) {
  WorkloadSpec spec;
  const json& adapters = as_array(require(j, path, "adapters"), path + ".adapters");
  for (std::size_t i = 0; i < adapters.size(); ++i) {
    const std::string p = path + ".adapters[" + std::to_string(i) + "]";
    const json& a = adapters[i];
    AdapterSpec adapter;
    adapter.adapter_id = static_cast<int>(as_int(require(a, p, "adapter_id"), p + ".adapter_id"));
    adapter.rank = static_cast<int>(as_int(require(a, p, "rank"), p + ".rank"));
    adapter.rate = as_num(require(a, p, "rate"), p + ".rate");
    if (const json* lengths = find(a, p, "lengths"))
      adapter.lengths = length_spec_from(*lengths, p + ".lengths");
    spec.adapters.push_back(std::move(adapter));
  }
  if (const json* lengths = find(j, path, "lengths"))
    spec.lengths = length_spec_from(*lengths, path + ".lengths");
  spec.duration_s = as_num(require(j, path, "duration_s"), path + ".duration_s");
  spec.seed = uint_or(j, path, "seed", 0);
  return spec;
}

// --- ServerConfig ---------------------------------------------------------

ServerConfig server_config_from(const json& j, const std::string& path) {
  ServerConfig config;
  config.slots = static_cast<int>(as_int(require(j, path, "slots"), path + ".slots"));

  {
    const std::string p = path + ".latency";
    const json& lat = require(j, path, "latency");
    config.latency.k1 = as_num(require(lat, p, "k1"), p + ".k1");
    config.latency.k2 = as_num(require(lat, p, "k2"), p + ".k2");
    config.latency.k3 = as_num(require(lat, p, "k3"), p + ".k3");
    config.latency.k4 = as_num(require(lat, p, "k4"), p + ".k4");
    config.latency.k5 = as_num(require(lat, p, "k5"), p + ".k5");
    config.latency.k6 = as_num(require(lat, p, "k6"), p + ".k6");
    config.latency.k7 = as_num(require(lat, p, "k7"), p + ".k7");
  }
  {
    const std::string p = path + ".memory";
    const json& mem = require(j, path, "memory");
    config.memory.total_kv_budget =
        as_int(require(mem, p, "total_kv_budget"), p + ".total_kv_budget");
    config.memory.kv_bytes_per_token = num_or(mem, p, "kv_bytes_per_token", 0.0);
    if (const json* table = find(mem, p, "slot_cost_table")) {
      const std::string tp = p + ".slot_cost_table";
      if (!table->is_object()) throw ValidationError(tp + ": expected an object");
      for (const auto& [key, value] : table->items())
        config.memory.slot_cost_table[rank_key(key, tp)] = as_int(value, tp + "." + key);
    }
    if (const json* base = find(mem, p, "slot_cost_base_rank8"))
      config.memory.slot_cost_base_rank8 = as_num(*base, p + ".slot_cost_base_rank8");
  }
  {
    const std::string p = path + ".load";
    const json& load = require(j, path, "load");
    const json& cpu = require(load, p, "cpu_load_seconds");
    const std::string cp = p + ".cpu_load_seconds";
    if (!cpu.is_object()) throw ValidationError(cp + ": expected an object");
    for (const auto& [key, value] : cpu.items())
      config.load.cpu_load_seconds[rank_key(key, cp)] = as_num(value, cp + "." + key);
    config.load.disk_multiplier = num_or(load, p, "disk_multiplier", 1.7);
    if (const json* src = find(load, p, "default_source"))
      config.load.default_source = load_source_from_string(as_str(*src, p + ".default_source"));
  }
  config.loaded_adapter_priority = bool_or(j, path, "loaded_adapter_priority", true);
  config.iteration_cap = int_or(j, path, "iteration_cap", config.iteration_cap);
  config.ideal_includes_input = bool_or(j, path, "ideal_includes_input", false);
  config.validate();
  return config;
}

// --- Condition ------------------------------------------------------------

Condition condition_from(const json& j, const std::string& path) {
  Condition c;
  const json& mix = as_array(require(j, path, "mix"), path + ".mix");
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const std::string p = path + ".mix[" + std::to_string(i) + "]";
    AdapterTemplate t;
    t.rank = static_cast<int>(as_int(require(mix[i], p, "rank"), p + ".rank"));
    t.rate = as_num(require(mix[i], p, "rate"), p + ".rate");
    c.mix.push_back(t);
  }
  c.lengths = length_spec_from(require(j, path, "lengths"), path + ".lengths");
  return c;
}

// --- SweepGrid / SweepOptions ---------------------------------------------

SweepGrid grid_from(const json& j, const std::string& path) {
  SweepGrid grid;
  const json& ns = as_array(require(j, path, "n_values"), path + ".n_values");
  for (std::size_t i = 0; i < ns.size(); ++i)
    grid.n_values.push_back(
        static_cast<int>(as_int(ns[i], path + ".n_values[" + std::to_string(i) + "]")));
  if (const json* mode = find(j, path, "g_mode")) {
    const std::string m = as_str(*mode, path + ".g_mode");
    if (m == "geometric") {
      grid.g_mode = SweepGrid::GMode::Geometric;
    } else if (m == "explicit") {
      grid.g_mode = SweepGrid::GMode::Explicit;
    } else {
      throw ValidationError(path + ".g_mode: expected \"geometric\" or \"explicit\"");
    }
  }
  if (const json* gs = find(j, path, "g_values")) {
    const json& arr = as_array(*gs, path + ".g_values");
    for (std::size_t i = 0; i < arr.size(); ++i)
      grid.g_values.push_back(
          static_cast<int>(as_int(arr[i], path + ".g_values[" + std::to_string(i) + "]")));
  }
  grid.validate();
  return grid;
}

LengthMode length_mode_from(const std::string& name, const std::string& path) {
  if (name == "full") return LengthMode::Full;
  if (name == "mean") return LengthMode::Mean;
  throw ValidationError(path + ": expected \"full\" or \"mean\", got \"" + name + "\"");
}

SweepOptions sweep_options_from(const json& j, const std::string& path) {
  SweepOptions options;
  options.early_exit = bool_or(j, path, "early_exit", true);
  options.early_exit_k =
      static_cast<int>(int_or(j, path, "early_exit_k", options.early_exit_k));
  options.jobs = static_cast<int>(int_or(j, path, "jobs", 1));
  if (const json* mode = find(j, path, "mode"))
    options.mode = length_mode_from(as_str(*mode, path + ".mode"), path + ".mode");
  if (options.early_exit_k < 1) throw ValidationError(path + ".early_exit_k: must be >= 1");
  if (options.jobs < 1) throw ValidationError(path + ".jobs: must be >= 1");
  return options;
}

// --- Forests --------------------------------------------------------------

json tree_to(const DecisionTree& tree) {
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes)
    nodes.push_back(json::array({n.feature_index, n.threshold, n.left, n.right, n.value,
                                 static_cast<std::uint64_t>(n.coverage)}));
  return json{{"nodes", std::move(nodes)}};
}

DecisionTree tree_from(const json& j, const std::string& path) {
  DecisionTree tree;
  const json& nodes = as_array(require(j, path, "nodes"), path + ".nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = path + ".nodes[" + std::to_string(i) + "]";
    const json& n = as_array(nodes[i], p);
    if (n.size() != 6)
      throw ValidationError(p + ": expected [feature, threshold, left, right, value, coverage]");
    TreeNode node;
    node.feature_index = static_cast<int>(as_int(n[0], p + "[0]"));
    node.threshold = as_num(n[1], p + "[1]");
    node.left = static_cast<int>(as_int(n[2], p + "[2]"));
    node.right = static_cast<int>(as_int(n[3], p + "[3]"));
    node.value = as_num(n[4], p + "[4]");
    node.coverage = static_cast<std::size_t>(as_uint(n[5], p + "[5]"));
    const int size = static_cast<int>(nodes.size());
    if (node.feature_index >= static_cast<int>(kNumFeatures) || node.left >= size ||
        node.right >= size)
      throw ValidationError(p + ": index out of range");
    tree.nodes.push_back(node);
  }
  if (tree.nodes.empty()) throw ValidationError(path + ".nodes: must be non-empty");
  return tree;
}

json forest_to(const ForestModel& forest) {
  json j;
  j["target"] = to_string(forest.target);
  j["seed"] = forest.seed;
  j["trained_rows"] = static_cast<std::uint64_t>(forest.trained_rows);
  j["feature_names"] = forest.feature_names;
  j["params"] = {{"n_trees", forest.params.n_trees},
                 {"bootstrap", forest.params.bootstrap},
                 {"tree",
                  {{"max_depth", forest.params.tree.max_depth},
                   {"min_leaf", static_cast<std::uint64_t>(forest.params.tree.min_leaf)},
                   {"feature_subset",
                    static_cast<std::uint64_t>(forest.params.tree.feature_subset)}}}};
  json trees = json::array();
  for (const DecisionTree& tree : forest.trees) trees.push_back(tree_to(tree));
  j["trees"] = std::move(trees);
  return j;
}

ForestModel forest_from(const json& j, const std::string& path) {
  ForestModel forest;
  forest.target = predict_target_from_string(as_str(require(j, path, "target"), path + ".target"));
  forest.seed = as_uint(require(j, path, "seed"), path + ".seed");
  forest.trained_rows =
      static_cast<std::size_t>(as_uint(require(j, path, "trained_rows"), path + ".trained_rows"));

  const json& names = as_array(require(j, path, "feature_names"), path + ".feature_names");
  for (std::size_t i = 0; i < names.size(); ++i)
    forest.feature_names.push_back(
        as_str(names[i], path + ".feature_names[" + std::to_string(i) + "]"));
  const auto& expected = WorkloadFeatures::names();
  if (forest.feature_names.size() != expected.size() ||
      !std::equal(expected.begin(), expected.end(), forest.feature_names.begin()))
    throw ValidationError(path + ".feature_names: model was built for a different feature set");

  {
    const std::string p = path + ".params";
    const json& params = require(j, path, "params");
    forest.params.n_trees = static_cast<int>(as_int(require(params, p, "n_trees"), p + ".n_trees"));
    forest.params.bootstrap = as_bool(require(params, p, "bootstrap"), p + ".bootstrap");
    const std::string tp = p + ".tree";
    const json& tree = require(params, p, "tree");
    forest.params.tree.max_depth =
        static_cast<int>(as_int(require(tree, tp, "max_depth"), tp + ".max_depth"));
    forest.params.tree.min_leaf =
        static_cast<std::size_t>(as_uint(require(tree, tp, "min_leaf"), tp + ".min_leaf"));
    forest.params.tree.feature_subset = static_cast<std::size_t>(
        as_uint(require(tree, tp, "feature_subset"), tp + ".feature_subset"));
  }

  const json& trees = as_array(require(j, path, "trees"), path + ".trees");
  for (std::size_t i = 0; i < trees.size(); ++i)
    forest.trees.push_back(tree_from(trees[i], path + ".trees[" + std::to_string(i) + "]"));
  if (forest.trees.empty()) throw ValidationError(path + ".trees: must be non-empty");
  return forest;
}

json linear_to(const LinearBaseline& baseline) {
  json j;
  j["coefficients"] = baseline.coefficients;
  j["intercept"] = baseline.intercept;
  j["used_features"] = baseline.used_features;
  return j;
}

LinearBaseline linear_from(const json& j, const std::string& path) {
  LinearBaseline baseline;
  const json& coef = as_array(require(j, path, "coefficients"), path + ".coefficients");
  if (coef.size() != kNumFeatures)
    throw ValidationError(path + ".coefficients: expected " + std::to_string(kNumFeatures) +
                          " entries");
  for (std::size_t i = 0; i < kNumFeatures; ++i)
    baseline.coefficients[i] = as_num(coef[i], path + ".coefficients[" + std::to_string(i) + "]");
  baseline.intercept = as_num(require(j, path, "intercept"), path + ".intercept");
  const json& used = as_array(require(j, path, "used_features"), path + ".used_features");
  for (std::size_t i = 0; i < used.size(); ++i)
    baseline.used_features.push_back(
        static_cast<int>(as_int(used[i], path + ".used_features[" + std::to_string(i) + "]")));
  return baseline;
}

// --- Scenarios ------------------------------------------------------------

std::vector<ScenarioMetrics> scenarios_from(const json& j) {
  const std::string path = "$";
  const json& arr = as_array(require(j, path, "scenarios"), path + ".scenarios");
  std::vector<ScenarioMetrics> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + ".scenarios[" + std::to_string(i) + "]";
    const json& s = arr[i];
    const std::string key = as_str(require(s, p, "key"), p + ".key");
    if (const json* requests = find(s, p, "requests")) {
      const double window = as_num(require(s, p, "window_s"), p + ".window_s");
      std::vector<TraceRequest> trace;
      const json& reqs = as_array(*requests, p + ".requests");
      for (std::size_t r = 0; r < reqs.size(); ++r) {
        const std::string rp = p + ".requests[" + std::to_string(r) + "]";
        TraceRequest request;
        request.adapter_id =
            static_cast<int>(int_or(reqs[r], rp, "adapter_id", 0));
        request.arrival_s = as_num(require(reqs[r], rp, "arrival_s"), rp + ".arrival_s");
        const json& times = as_array(require(reqs[r], rp, "token_times_s"), rp + ".token_times_s");
        for (std::size_t t = 0; t < times.size(); ++t)
          request.token_times_s.push_back(
              as_num(times[t], rp + ".token_times_s[" + std::to_string(t) + "]"));
        trace.push_back(std::move(request));
      }
      out.push_back(reduce_trace(trace, window, key));
    } else {
      ScenarioMetrics m;
      m.key = key;
      m.throughput_tok_s =
          as_num(require(s, p, "throughput_tok_s"), p + ".throughput_tok_s");
      m.itl_mean_s = as_num(require(s, p, "itl_mean_s"), p + ".itl_mean_s");
      m.ttft_mean_s = as_num(require(s, p, "ttft_mean_s"), p + ".ttft_mean_s");
      out.push_back(std::move(m));
    }
  }
  return out;
}

}  // namespace

// --- Public entry points --------------------------------------------------

WorkloadSpec workload_from_json(const std::string& text) {
  return workload_from(parse_text(text), "$");
}

WorkloadSpec load_workload(const std::string& path) {
  try {
    return workload_from_json(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string workload_to_json(const WorkloadSpec& spec) {
  json j;
  json adapters = json::array();
  for (const AdapterSpec& a : spec.adapters) {
    json aj;
    aj["adapter_id"] = a.adapter_id;
    aj["rank"] = a.rank;
    aj["rate"] = a.rate;
    if (a.lengths) aj["lengths"] = length_spec_to(*a.lengths);
    adapters.push_back(std::move(aj));
  }
  j["adapters"] = std::move(adapters);
  j["lengths"] = length_spec_to(spec.lengths);
  j["duration_s"] = spec.duration_s;
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

ServerConfig server_config_from_json(const std::string& text) {
  return server_config_from(parse_text(text), "$");
}

ServerConfig load_server_config(const std::string& path) {
  try {
    return server_config_from_json(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string server_config_to_json(const ServerConfig& config) {
  json j;
  j["slots"] = config.slots;
  j["latency"] = {{"k1", config.latency.k1}, {"k2", config.latency.k2},
                  {"k3", config.latency.k3}, {"k4", config.latency.k4},
                  {"k5", config.latency.k5}, {"k6", config.latency.k6},
                  {"k7", config.latency.k7}};
  {
    json mem;
    mem["total_kv_budget"] = config.memory.total_kv_budget;
    mem["kv_bytes_per_token"] = config.memory.kv_bytes_per_token;
    if (!config.memory.slot_cost_table.empty()) {
      json table;
      for (const auto& [rank, tokens] : config.memory.slot_cost_table)
        table[std::to_string(rank)] = tokens;
      mem["slot_cost_table"] = std::move(table);
    }
    if (config.memory.slot_cost_base_rank8)
      mem["slot_cost_base_rank8"] = *config.memory.slot_cost_base_rank8;
    j["memory"] = std::move(mem);
  }
  {
    json load;
    json cpu;
    for (const auto& [rank, seconds] : config.load.cpu_load_seconds)
      cpu[std::to_string(rank)] = seconds;
    load["cpu_load_seconds"] = std::move(cpu);
    load["disk_multiplier"] = config.load.disk_multiplier;
    load["default_source"] = to_string(config.load.default_source);
    j["load"] = std::move(load);
  }
  j["loaded_adapter_priority"] = config.loaded_adapter_priority;
  j["iteration_cap"] = config.iteration_cap;
  j["ideal_includes_input"] = config.ideal_includes_input;
  return j.dump(2) + "\n";
}

Condition condition_from_json(const std::string& text) {
  return condition_from(parse_text(text), "$");
}

Condition load_condition(const std::string& path) {
  try {
    return condition_from_json(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

DatasetSpec dataset_spec_from_json(const std::string& text) {
  const json j = parse_text(text);
  const std::string path = "$";
  DatasetSpec spec;
  const json& rates = as_array(require(j, path, "rates"), path + ".rates");
  for (std::size_t i = 0; i < rates.size(); ++i)
    spec.rates.push_back(as_num(rates[i], path + ".rates[" + std::to_string(i) + "]"));
  const json& ranks = as_array(require(j, path, "ranks"), path + ".ranks");
  for (std::size_t i = 0; i < ranks.size(); ++i)
    spec.ranks.push_back(
        static_cast<int>(as_int(ranks[i], path + ".ranks[" + std::to_string(i) + "]")));
  spec.triple_size = static_cast<int>(int_or(j, path, "triple_size", 3));
  spec.condition_stride = static_cast<int>(int_or(j, path, "condition_stride", 1));
  spec.lengths = length_spec_from(require(j, path, "lengths"), path + ".lengths");
  spec.duration_s = num_or(j, path, "duration_s", 600.0);
  spec.seed = uint_or(j, path, "seed", 0);
  spec.grid = grid_from(require(j, path, "grid"), path + ".grid");
  if (const json* sweep = find(j, path, "sweep"))
    spec.sweep = sweep_options_from(*sweep, path + ".sweep");
  return spec;
}

DatasetSpec load_dataset_spec(const std::string& path) {
  try {
    return dataset_spec_from_json(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::vector<ScenarioMetrics> scenarios_from_json(const std::string& text) {
  return scenarios_from(parse_text(text));
}

std::vector<ScenarioMetrics> load_scenarios(const std::string& path) {
  try {
    return scenarios_from_json(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string scenarios_to_json(const std::vector<ScenarioMetrics>& scenarios) {
  json arr = json::array();
  for (const ScenarioMetrics& s : scenarios) {
    json sj;
    sj["key"] = s.key;
    sj["throughput_tok_s"] = s.throughput_tok_s;
    sj["itl_mean_s"] = s.itl_mean_s;
    sj["ttft_mean_s"] = s.ttft_mean_s;
    arr.push_back(std::move(sj));
  }
  json j;
  j["scenarios"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::string simulation_report_json(const SimulationResult& result, const MetricsSummary& metrics,
                                   const SimulationReportOptions& options) {
  json j;
  j["schema"] = "loratwin.simulation_report.v1";

  json m;
  m["throughput_tok_s"] = metrics.throughput_tok_s;
  m["itl_mean_s"] = metrics.itl_mean_s;
  m["itl_p50_s"] = metrics.itl_p50_s;
  m["itl_p99_s"] = metrics.itl_p99_s;
  m["ttft_mean_s"] = metrics.ttft_mean_s;
  m["ttft_p50_s"] = metrics.ttft_p50_s;
  m["ttft_p99_s"] = metrics.ttft_p99_s;
  m["ideal_throughput_tok_s"] = metrics.ideal_throughput_tok_s;
  m["starved"] = metrics.starved;
  m["finished_count"] = metrics.finished_count;
  m["rejected_count"] = metrics.rejected_count;
  m["degenerate"] = metrics.degenerate;
  j["metrics"] = std::move(m);

  json s;
  s["iterations"] = result.iterations;
  s["final_clock_s"] = result.final_clock_s;
  s["duration_s"] = result.duration_s;
  s["truncated"] = result.truncated;
  s["slots"] = result.slots;
  s["served_adapters"] = result.served_adapters;
  s["kv_capacity_tokens"] = result.kv_capacity_tokens;
  json loads = json::array();
  for (const LoadEvent& e : result.load_events)
    loads.push_back({{"time_s", e.time_s},
                     {"adapter_id", e.adapter_id},
                     {"rank", e.rank},
                     {"source", to_string(e.source)},
                     {"latency_s", e.latency_s}});
  s["load_events"] = std::move(loads);
  if (options.include_wall_time) s["wall_time_s"] = result.wall_time_s;
  j["simulation"] = std::move(s);

  if (options.include_requests) {
    json requests = json::array();
    for (const RequestState& r : result.requests) {
      json rj;
      rj["request_id"] = r.request.request_id;
      rj["adapter_id"] = r.request.adapter_id;
      rj["arrival_time_s"] = r.request.arrival_time_s;
      rj["input_tokens"] = r.request.input_tokens;
      rj["output_tokens"] = r.request.output_tokens;
      switch (r.phase) {
        case Phase::Waiting: rj["phase"] = "waiting"; break;
        case Phase::Running: rj["phase"] = "running"; break;
        case Phase::Preempted: rj["phase"] = "preempted"; break;
        case Phase::Finished: rj["phase"] = "finished"; break;
        case Phase::Rejected: rj["phase"] = "rejected"; break;
      }
      rj["tokens_generated"] = r.tokens_generated;
      if (r.first_token_time_s) rj["first_token_time_s"] = *r.first_token_time_s;
      rj["token_emit_times_s"] = r.token_emit_times_s;
      if (r.phase == Phase::Finished) rj["completion_time_s"] = r.completion_time_s;
      rj["preemption_count"] = r.preemption_count;
      requests.push_back(std::move(rj));
    }
    j["requests"] = std::move(requests);
  }

  if (options.include_trace) {
    json trace = json::array();
    for (const IterationTraceRow& row : result.iteration_trace)
      trace.push_back({{"time_s", row.time_s},
                       {"iteration", row.iteration},
                       {"r_running", row.r_running},
                       {"r_waiting", row.r_waiting},
                       {"a_running", row.a_running},
                       {"lat_step_s", row.lat_step_s},
                       {"loads", row.loads}});
    j["iteration_trace"] = std::move(trace);
  }

  return j.dump(2) + "\n";
}

std::string placement_result_to_json(const PlacementResult& result) {
  json j;
  j["schema"] = "loratwin.placement.v1";
  j["max_throughput_tok_s"] = result.max_throughput_tok_s;
  j["n_star"] = result.n_star;
  j["g_star"] = result.g_star;
  j["all_starved"] = result.all_starved;
  j["frontier_open"] = result.frontier_open;
  json frontier = json::array();
  for (const FrontierPoint& p : result.frontier)
    frontier.push_back({{"n", p.n},
                        {"g", p.g},
                        {"throughput_tok_s", p.throughput_tok_s},
                        {"starved", p.starved},
                        {"skipped", p.skipped}});
  j["frontier"] = std::move(frontier);
  return j.dump(2) + "\n";
}

std::string compare_report_to_json(const CompareReport& report) {
  json j;
  j["schema"] = "loratwin.compare.v1";
  j["throughput_smape_pct"] = report.throughput_smape_pct;
  j["itl_smape_pct"] = report.itl_smape_pct;
  j["ttft_smape_pct"] = report.ttft_smape_pct;
  j["matched_keys"] = report.matched_keys;
  j["unmatched_keys"] = report.unmatched_keys;
  return j.dump(2) + "\n";
}

std::string model_bundle_to_json(const ModelBundle& bundle) {
  json j;
  j["schema"] = "loratwin.model.v1";
  j["dataset_rows"] = static_cast<std::uint64_t>(bundle.dataset_rows);
  j["trained_rows"] = static_cast<std::uint64_t>(bundle.trained_rows);
  j["test_fraction"] = bundle.test_fraction;
  j["seed"] = bundle.seed;
  j["forests"] = {{"throughput", forest_to(bundle.model.throughput)},
                  {"n_star", forest_to(bundle.model.n_star)},
                  {"g_star", forest_to(bundle.model.g_star)}};
  json baselines;
  if (bundle.linear_throughput) baselines["throughput"] = linear_to(*bundle.linear_throughput);
  if (bundle.linear_n_star) baselines["n_star"] = linear_to(*bundle.linear_n_star);
  if (bundle.linear_g_star) baselines["g_star"] = linear_to(*bundle.linear_g_star);
  if (!baselines.is_null()) j["linear_baselines"] = std::move(baselines);
  return j.dump(2) + "\n";
}

ModelBundle model_bundle_from_json(const std::string& text) {
  const json j = parse_text(text);
  const std::string path = "$";
  const std::string schema = as_str(require(j, path, "schema"), path + ".schema");
  if (schema != "loratwin.model.v1")
    throw ValidationError(path + ".schema: unsupported model schema \"" + schema + "\"");

  ModelBundle bundle;
  bundle.dataset_rows =
      static_cast<std::size_t>(uint_or(j, path, "dataset_rows", 0));
  bundle.trained_rows =
      static_cast<std::size_t>(uint_or(j, path, "trained_rows", 0));
  bundle.test_fraction = num_or(j, path, "test_fraction", 0.0);
  bundle.seed = uint_or(j, path, "seed", 0);

  const std::string fp = path + ".forests";
  const json& forests = require(j, path, "forests");
  bundle.model.throughput = forest_from(require(forests, fp, "throughput"), fp + ".throughput");
  bundle.model.n_star = forest_from(require(forests, fp, "n_star"), fp + ".n_star");
  bundle.model.g_star = forest_from(require(forests, fp, "g_star"), fp + ".g_star");

  if (const json* baselines = find(j, path, "linear_baselines")) {
    const std::string bp = path + ".linear_baselines";
    if (const json* b = find(*baselines, bp, "throughput"))
      bundle.linear_throughput = linear_from(*b, bp + ".throughput");
    if (const json* b = find(*baselines, bp, "n_star"))
      bundle.linear_n_star = linear_from(*b, bp + ".n_star");
    if (const json* b = find(*baselines, bp, "g_star"))
      bundle.linear_g_star = linear_from(*b, bp + ".g_star");
  }
  return bundle;
}

ModelBundle load_model_bundle(const std::string& path) {
  try {
    return model_bundle_from_json(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw ValidationError("failed writing file: " + path);
}

}  // namespace loratwin
