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

#include "loratwin/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "loratwin/errors.hpp"

namespace loratwin {

std::string to_string(LoadSource source) {
  return source == LoadSource::Cpu ? "cpu" : "disk";
}

LoadSource load_source_from_string(const std::string& s) {
  if (s == "cpu") return LoadSource::Cpu;
  if (s == "disk") return LoadSource::Disk;
  throw ValidationError("load source must be \"cpu\" or \"disk\", got \"" + s + "\"");
}

void LatencyCoefficients::validate() const {
  if (k4 < 0.0) throw ValidationError("estimators.latency.k4: must be >= 0");
  if (k5 <= 0.0) throw ValidationError("estimators.latency.k5: must be > 0 (a forward pass takes time)");
  if (k6 < 0.0) throw ValidationError("estimators.latency.k6: must be >= 0");
  if (k7 < 1.0)
    throw ValidationError("estimators.latency.k7: must be >= 1 (adapters never speed up the model)");
}

std::int64_t MemoryModel::slot_cost_tokens(int rank) const {
  if (rank == 0) return 0;
  if (rank < 0) throw ValidationError("slot rank must be >= 0, got " + std::to_string(rank));
  auto it = slot_cost_table.find(rank);
  if (it != slot_cost_table.end()) return it->second;
  if (slot_cost_base_rank8)
    return static_cast<std::int64_t>(std::llround(*slot_cost_base_rank8 * rank / 8.0));
  throw ConfigError("estimators.memory: no slot cost for rank " + std::to_string(rank) +
                    " (add a slot_cost_tokens entry or slot_cost_base_rank8)");
}

void MemoryModel::validate() const {
  if (total_kv_budget <= 0)
    throw ValidationError("estimators.memory.total_kv_budget: must be > 0");
  if (slot_cost_table.empty() && !slot_cost_base_rank8)
    throw ValidationError(
        "estimators.memory: one of slot_cost_tokens or slot_cost_base_rank8 is required");
  if (slot_cost_base_rank8 && *slot_cost_base_rank8 <= 0.0)
    throw ValidationError("estimators.memory.slot_cost_base_rank8: must be > 0");
  // Strictly increasing in rank, including across the table/linear boundary.
  std::int64_t prev = 0;
  int prev_rank = 0;
  for (const auto& [rank, cost] : slot_cost_table) {
    if (rank <= 0) throw ValidationError("estimators.memory.slot_cost_tokens: ranks must be > 0");
    if (cost <= prev)
      throw ValidationError("estimators.memory.slot_cost_tokens: cost must increase with rank (rank " +
                            std::to_string(rank) + " vs rank " + std::to_string(prev_rank) + ")");
    prev = cost;
    prev_rank = rank;
  }
}

double LoadLatencyTable::load_latency(int rank, LoadSource source) const {
  auto it = cpu_load_seconds.find(rank);
  if (it == cpu_load_seconds.end())
    throw ConfigError("estimators.load.cpu_load_seconds: no entry for rank " + std::to_string(rank));
  return source == LoadSource::Cpu ? it->second : it->second * disk_multiplier;
}

void LoadLatencyTable::validate() const {
  if (disk_multiplier < 1.0)
    throw ValidationError("estimators.load.disk_multiplier: must be >= 1");
  double prev = 0.0;
  int prev_rank = 0;
  for (const auto& [rank, seconds] : cpu_load_seconds) {
    if (rank <= 0) throw ValidationError("estimators.load.cpu_load_seconds: ranks must be > 0");
    if (seconds < prev)
      throw ValidationError("estimators.load.cpu_load_seconds: latency must not decrease with rank (rank " +
                            std::to_string(rank) + " vs rank " + std::to_string(prev_rank) + ")");
    prev = seconds;
    prev_rank = rank;
  }
}

std::int64_t mem_max(const MemoryModel& mm, int g, const std::vector<int>& slot_rank_profile) {
  if (static_cast<int>(slot_rank_profile.size()) != g)
    throw InternalError("mem_max: slot rank profile has " +
                        std::to_string(slot_rank_profile.size()) + " entries for g=" +
                        std::to_string(g));
  std::int64_t capacity = mm.total_kv_budget;
  for (int rank : slot_rank_profile) capacity -= mm.slot_cost_tokens(rank);
  return std::max<std::int64_t>(capacity, 0);
}

double lat_sched(const LatencyCoefficients& c, int r_running, int r_waiting, int g, int n) {
  if (n <= 0 || g <= 0)
    throw ValidationError("lat_sched: g and n must be >= 1 (got g=" + std::to_string(g) +
                          ", n=" + std::to_string(n) + ")");
  const double ratio = std::min(static_cast<double>(g) / static_cast<double>(n), 1.0);
  const double v = c.k1 * r_running + c.k2 * r_waiting + c.k3 * r_waiting * ratio;
  return std::max(v, 0.0);
}

double lat_model(const LatencyCoefficients& c, int r_running) {
  return c.k4 * r_running + c.k5;
}

double lat_adapters(const LatencyCoefficients& c, int a_running) {
  if (a_running == 0) return 1.0;
  return c.k6 * a_running + c.k7;
}

double lat_load(const LoadLatencyTable& t, const std::vector<std::pair<int, LoadSource>>& loads) {
  double total = 0.0;
  for (const auto& [rank, source] : loads) total += t.load_latency(rank, source);
  return total;
}

double lat_step(const LatencyCoefficients& c, const LoadLatencyTable& t, int r_running,
                int r_waiting, int g, int n, int a_running,
                const std::vector<std::pair<int, LoadSource>>& loads) {
  return lat_sched(c, r_running, r_waiting, g, n) + lat_load(t, loads) +
         lat_model(c, r_running) * lat_adapters(c, a_running);
}

std::vector<double> fit_linear(const std::vector<std::vector<double>>& features,
                               const std::vector<double>& observed,
                               const std::vector<std::string>& feature_names) {
  if (features.empty()) throw FitError("fit_linear: no samples");
  if (features.size() != observed.size())
    throw FitError("fit_linear: " + std::to_string(features.size()) + " feature rows vs " +
                   std::to_string(observed.size()) + " observations");
  const std::size_t n_features = features.front().size();
  if (n_features == 0) throw FitError("fit_linear: empty feature vectors");
  if (features.size() < n_features)
    throw FitError("fit_linear: " + std::to_string(features.size()) + " samples for " +
                   std::to_string(n_features) + " coefficients");

  Eigen::MatrixXd x(features.size(), n_features);
  Eigen::VectorXd y(observed.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != n_features)
      throw FitError("fit_linear: ragged feature row " + std::to_string(i));
    for (std::size_t j = 0; j < n_features; ++j) x(i, j) = features[i][j];
    y(i) = observed[i];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  // A generous threshold so near-duplicate columns are reported as collinear
  // instead of producing astronomically ill-conditioned coefficients.
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(n_features)) {
    // Columns permuted past the numerical rank are the linearly dependent ones.
    const auto perm = qr.colsPermutation().indices();
    std::ostringstream msg;
    msg << "fit_linear: design matrix is rank-deficient (rank " << qr.rank() << " of "
        << n_features << "); collinear feature(s):";
    for (Eigen::Index j = qr.rank(); j < static_cast<Eigen::Index>(n_features); ++j) {
      const auto col = static_cast<std::size_t>(perm(j));
      msg << ' ' << (col < feature_names.size() ? feature_names[col]
                                                : "feature " + std::to_string(col));
    }
    throw FitError(msg.str());
  }

  const Eigen::VectorXd beta = qr.solve(y);
  return std::vector<double>(beta.data(), beta.data() + beta.size());
}

}  // namespace loratwin
