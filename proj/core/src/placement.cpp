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

#include "loratwin/placement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "loratwin/engine.hpp"
#include "loratwin/errors.hpp"
#include "loratwin/metrics.hpp"

namespace loratwin {

namespace {

struct Stats4 {
  double max, min, mean, std;
};

Stats4 stats_of(const std::vector<double>& v) {
  Stats4 s{0.0, 0.0, 0.0, 0.0};
  if (v.empty()) return s;
  s.max = *std::max_element(v.begin(), v.end());
  s.min = *std::min_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(v.size()));
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Runs `count` tasks over up to `jobs` threads; task exceptions are
// re-raised on the calling thread, lowest task index first, so failures are
// deterministic regardless of scheduling.
void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  std::vector<std::exception_ptr> errors(count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

const std::array<std::string, kNumFeatures>& WorkloadFeatures::names() {
  static const std::array<std::string, kNumFeatures> kNames = {
      "rate_max",       "rate_min",       "rate_mean",       "rate_std",
      "rank_max",       "rank_min",       "rank_mean",       "rank_std",
      "input_len_max",  "input_len_min",  "input_len_mean",  "input_len_std",
      "output_len_max", "output_len_min", "output_len_mean", "output_len_std"};
  return kNames;
}

int WorkloadFeatures::index_of(const std::string& name) {
  const auto& all = names();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] == name) return static_cast<int>(i);
  }
  return -1;
}

WorkloadFeatures encode_workload(const Condition& condition) {
  if (condition.mix.empty()) throw ValidationError("condition.mix: must be non-empty");
  std::vector<double> rates, ranks;
  rates.reserve(condition.mix.size());
  ranks.reserve(condition.mix.size());
  for (const AdapterTemplate& leg : condition.mix) {
    rates.push_back(leg.rate);
    ranks.push_back(static_cast<double>(leg.rank));
  }
  const Stats4 rate_s = stats_of(rates);
  const Stats4 rank_s = stats_of(ranks);
  const LengthSpec::Stats in_s = condition.lengths.input_stats();
  const LengthSpec::Stats out_s = condition.lengths.output_stats();

  WorkloadFeatures f;
  f.values = {rate_s.max, rate_s.min, rate_s.mean, rate_s.std,
              rank_s.max, rank_s.min, rank_s.mean, rank_s.std,
              in_s.max,   in_s.min,   in_s.mean,   in_s.std,
              out_s.max,  out_s.min,  out_s.mean,  out_s.std};
  return f;
}

WorkloadSpec instantiate_condition(const Condition& condition, int served_adapters,
                                   double duration_s, std::uint64_t seed) {
  if (condition.mix.empty()) throw ValidationError("condition.mix: must be non-empty");
  if (served_adapters < 1) throw ValidationError("served_adapters: must be >= 1");
  WorkloadSpec spec;
  spec.lengths = condition.lengths;
  spec.duration_s = duration_s;
  spec.seed = seed;
  spec.adapters.reserve(static_cast<std::size_t>(served_adapters));
  for (int i = 0; i < served_adapters; ++i) {
    const AdapterTemplate& leg = condition.mix[static_cast<std::size_t>(i) % condition.mix.size()];
    AdapterSpec a;
    a.adapter_id = i + 1;
    a.rank = leg.rank;
    a.rate = leg.rate;
    spec.adapters.push_back(a);
  }
  return spec;
}

std::vector<int> SweepGrid::g_candidates(int n) const {
  std::set<int> gs;
  if (g_mode == GMode::Geometric) {
    for (int g : {8, n / 4, n / 2, n}) gs.insert(std::clamp(g, 1, n));
  } else {
    for (int g : g_values) gs.insert(std::clamp(g, 1, n));
  }
  return std::vector<int>(gs.begin(), gs.end());
}

void SweepGrid::validate() const {
  if (n_values.empty()) throw ValidationError("grid.n_values: must be non-empty");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 1) throw ValidationError("grid.n_values: entries must be >= 1");
    if (i > 0 && n_values[i] <= n_values[i - 1])
      throw ValidationError("grid.n_values: must be strictly ascending");
  }
  if (g_mode == GMode::Explicit) {
    if (g_values.empty())
      throw ValidationError("grid.g_values: must be non-empty in explicit mode");
    for (int g : g_values) {
      if (g < 1) throw ValidationError("grid.g_values: entries must be >= 1");
    }
  }
}

PlacementResult sweep_optimal(const Condition& condition, const ServerConfig& config,
                              const SweepGrid& grid, double duration_s, std::uint64_t seed,
                              const SweepOptions& options) {
  grid.validate();
  condition.lengths.validate("condition.lengths");
  if (condition.mix.empty()) throw ValidationError("condition.mix: must be non-empty");

  PlacementResult result;
  double best_tput = -1.0;
  int best_n = 0, best_g = 0;
  bool any_non_starved = false;
  bool any_starved = false;
  int stall = 0;
  std::size_t stop = grid.n_values.size();

  // Fallback for the all-starved verdict: best G at the smallest N.
  double first_n_best_tput = -1.0;
  int first_n_best_g = 0;

  for (std::size_t ni = 0; ni < grid.n_values.size(); ++ni) {
    const int n = grid.n_values[ni];
    const std::vector<int> gs = grid.g_candidates(n);
    std::vector<FrontierPoint> points(gs.size());

    run_parallel(gs.size(), options.jobs, [&](std::size_t gi) {
      ServerConfig point_config = config;
      point_config.slots = gs[gi];
      const WorkloadSpec spec = instantiate_condition(condition, n, duration_s, seed);
      const SimulationResult sim = run_simulation(spec, point_config, options.mode);
      const MetricsSummary m =
          compute_metrics(sim, spec, point_config.ideal_includes_input);
      points[gi] = FrontierPoint{n, gs[gi], m.throughput_tok_s, m.starved, false};
    });

    bool improved = false;
    for (const FrontierPoint& p : points) {
      result.frontier.push_back(p);
      if (p.starved) any_starved = true;
      if (!p.starved) {
        any_non_starved = true;
        if (p.throughput_tok_s > best_tput) {
          best_tput = p.throughput_tok_s;
          best_n = p.n;
          best_g = p.g;
          improved = true;
        }
      }
      if (ni == 0 && p.throughput_tok_s > first_n_best_tput) {
        first_n_best_tput = p.throughput_tok_s;
        first_n_best_g = p.g;
      }
    }

    if (options.early_exit) {
      stall = improved ? 0 : stall + 1;
      if (stall >= options.early_exit_k && ni + 1 < grid.n_values.size()) {
        stop = ni + 1;
        break;
      }
    }
  }

  for (std::size_t ni = stop; ni < grid.n_values.size(); ++ni)
    result.frontier.push_back(FrontierPoint{grid.n_values[ni], 0, 0.0, false, true});

  if (!any_non_starved) {
    result.all_starved = true;
    result.n_star = grid.n_values.front();
    result.g_star = first_n_best_g;
    result.max_throughput_tok_s = std::max(first_n_best_tput, 0.0);
    return result;
  }

  result.max_throughput_tok_s = best_tput;
  result.n_star = best_n;
  result.g_star = best_g;
  const int last_evaluated = grid.n_values[stop - 1];
  result.frontier_open = !any_starved && best_n == last_evaluated;
  return result;
}

std::uint64_t condition_hash(const Condition& condition, double duration_s, std::uint64_t seed,
                             const SweepGrid& grid) {
  std::ostringstream canon;
  canon << "v1|mix=";
  for (const AdapterTemplate& leg : condition.mix)
    canon << leg.rank << ':' << format_double(leg.rate) << ',';
  canon << "|lengths=";
  if (condition.lengths.mode == LengthMode::Full) {
    canon << "full:";
    for (const auto& [in, out] : condition.lengths.full_lengths) canon << in << '/' << out << ',';
  } else {
    canon << "mean:" << format_double(condition.lengths.mean_input) << ','
          << format_double(condition.lengths.std_input) << ','
          << format_double(condition.lengths.mean_output) << ','
          << format_double(condition.lengths.std_output);
  }
  canon << "|dur=" << format_double(duration_s) << "|seed=" << seed << "|n=";
  for (int n : grid.n_values) canon << n << ',';
  canon << "|g=" << (grid.g_mode == SweepGrid::GMode::Geometric ? "geo" : "exp") << ':';
  if (grid.g_mode == SweepGrid::GMode::Explicit) {
    for (int g : grid.g_values) canon << g << ',';
  }

  // FNV-1a, 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canon.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<Condition> enumerate_conditions(const DatasetSpec& spec) {
  if (spec.triple_size < 1) throw ValidationError("dataset.triple_size: must be >= 1");
  if (spec.rates.empty()) throw ValidationError("dataset.rates: must be non-empty");
  if (spec.ranks.empty()) throw ValidationError("dataset.ranks: must be non-empty");
  if (spec.condition_stride < 1) throw ValidationError("dataset.condition_stride: must be >= 1");

  // Size-k multisets as non-decreasing index tuples, in lexicographic order.
  auto combos = [&](std::size_t n_values) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> idx(static_cast<std::size_t>(spec.triple_size), 0);
    for (;;) {
      out.push_back(idx);
      int pos = spec.triple_size - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n_values - 1) --pos;
      if (pos < 0) break;
      const std::size_t bumped = ++idx[static_cast<std::size_t>(pos)];
      for (std::size_t j = static_cast<std::size_t>(pos) + 1; j < idx.size(); ++j)
        idx[j] = bumped;
    }
    return out;
  };

  const auto rate_triples = combos(spec.rates.size());
  const auto rank_triples = combos(spec.ranks.size());

  std::vector<Condition> conditions;
  std::size_t counter = 0;
  for (const auto& rt : rate_triples) {
    for (const auto& kt : rank_triples) {
      if (counter++ % static_cast<std::size_t>(spec.condition_stride) != 0) continue;
      Condition c;
      c.lengths = spec.lengths;
      for (int leg = 0; leg < spec.triple_size; ++leg) {
        AdapterTemplate t;
        t.rate = spec.rates[rt[static_cast<std::size_t>(leg)]];
        t.rank = spec.ranks[kt[static_cast<std::size_t>(leg)]];
        c.mix.push_back(t);
      }
      conditions.push_back(std::move(c));
    }
  }
  return conditions;
}

void write_dataset_header(std::ostream& out) {
  for (const std::string& name : WorkloadFeatures::names()) out << name << ',';
  out << "max_throughput,n_star,g_star,all_starved,condition_hash,duration_s,seed\n";
}

void write_dataset_row(std::ostream& out, const DatasetRow& row) {
  for (double v : row.features.values) out << format_double(v) << ',';
  out << format_double(row.max_throughput_tok_s) << ',' << row.n_star << ',' << row.g_star << ','
      << (row.all_starved ? 1 : 0) << ',' << row.condition_hash << ','
      << format_double(row.duration_s) << ',' << row.seed << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

constexpr std::size_t kDatasetColumns = kNumFeatures + 7;

}  // namespace

std::vector<DatasetRow> read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty dataset CSV: " + path);
  {
    std::ostringstream expected;
    write_dataset_header(expected);
    std::string want = expected.str();
    want.pop_back();  // newline
    if (line != want)
      throw ValidationError("dataset CSV header mismatch in " + path + " (got \"" + line + "\")");
  }

  std::vector<DatasetRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != kDatasetColumns) {
      // A truncated final line (interrupted run) is tolerated; anything
      // else is a malformed file.
      if (in.eof()) break;
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(kDatasetColumns) + " columns, got " +
                            std::to_string(fields.size()));
    }
    try {
      DatasetRow row;
      for (std::size_t i = 0; i < kNumFeatures; ++i) row.features.values[i] = std::stod(fields[i]);
      row.max_throughput_tok_s = std::stod(fields[kNumFeatures]);
      row.n_star = std::stoi(fields[kNumFeatures + 1]);
      row.g_star = std::stoi(fields[kNumFeatures + 2]);
      row.all_starved = std::stoi(fields[kNumFeatures + 3]) != 0;
      row.condition_hash = std::stoull(fields[kNumFeatures + 4]);
      row.duration_s = std::stod(fields[kNumFeatures + 5]);
      row.seed = std::stoull(fields[kNumFeatures + 6]);
      rows.push_back(row);
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": unparsable numeric field");
    }
  }
  return rows;
}

DatasetProgress generate_dataset(const DatasetSpec& spec, const ServerConfig& config,
                                 const std::string& out_csv,
                                 const std::function<void(const std::string&)>& on_error) {
  spec.grid.validate();
  const std::vector<Condition> conditions = enumerate_conditions(spec);

  DatasetProgress progress;
  progress.total_conditions = conditions.size();
  if (conditions.empty()) {
    if (on_error) on_error("empty condition grid; nothing to do");
    return progress;
  }

  // Resume: collect hashes already on disk (tolerating a torn final line).
  std::set<std::uint64_t> done;
  bool file_exists = false;
  {
    std::ifstream in(out_csv, std::ios::binary);
    if (in) {
      file_exists = true;
      try {
        for (const DatasetRow& row : read_dataset_csv(out_csv)) done.insert(row.condition_hash);
      } catch (const std::exception& e) {
        throw ValidationError("resume failed: " + std::string(e.what()));
      }
      // Rows always end in a newline; bytes after the last one are the torn
      // tail of an interrupted run. Drop them so appended rows stay intact.
      const std::string content((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
      const std::size_t last_newline = content.rfind('\n');
      const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
      if (keep < content.size()) {
        in.close();
        std::filesystem::resize_file(out_csv, keep);
      }
    }
  }

  std::ofstream out(out_csv, std::ios::app);
  if (!out) throw ValidationError("cannot open dataset CSV for writing: " + out_csv);
  if (!file_exists) write_dataset_header(out);

  struct Slot {
    bool pending = true;
    bool failed = false;
    bool skipped = false;
    DatasetRow row;
    std::string error;
  };
  std::vector<Slot> slots(conditions.size());

  std::mutex io_mutex;
  std::size_t next_flush = 0;
  auto flush_ready = [&] {
    // Serialize completed rows in canonical condition order so the file
    // content does not depend on worker scheduling.
    while (next_flush < slots.size() && !slots[next_flush].pending) {
      Slot& s = slots[next_flush];
      if (s.failed) {
        ++progress.failed;
        if (on_error) on_error(s.error);
      } else if (!s.skipped) {
        write_dataset_row(out, s.row);
        out.flush();
        ++progress.completed;
      } else {
        ++progress.completed;
      }
      ++next_flush;
    }
  };

  // The sweep itself runs single-threaded inside each worker; parallelism
  // lives at the condition level here.
  SweepOptions inner = spec.sweep;
  inner.jobs = 1;

  run_parallel(conditions.size(), spec.sweep.jobs, [&](std::size_t i) {
    const Condition& c = conditions[i];
    const std::uint64_t hash = condition_hash(c, spec.duration_s, spec.seed, spec.grid);
    Slot local;
    local.pending = false;
    if (done.count(hash)) {
      local.skipped = true;
    } else {
      try {
        const PlacementResult placement =
            sweep_optimal(c, config, spec.grid, spec.duration_s, spec.seed, inner);
        DatasetRow row;
        row.features = encode_workload(c);
        row.max_throughput_tok_s = placement.max_throughput_tok_s;
        row.n_star = placement.n_star;
        row.g_star = placement.g_star;
        row.all_starved = placement.all_starved;
        row.condition_hash = hash;
        row.duration_s = spec.duration_s;
        row.seed = spec.seed;
        local.row = row;
      } catch (const std::exception& e) {
        local.failed = true;
        local.error = "condition " + std::to_string(i) + " (hash " + std::to_string(hash) +
                      "): " + e.what();
      }
    }
    std::lock_guard<std::mutex> lock(io_mutex);
    slots[i] = std::move(local);
    flush_ready();
  });

  std::lock_guard<std::mutex> lock(io_mutex);
  flush_ready();
  return progress;
}

}  // namespace loratwin
