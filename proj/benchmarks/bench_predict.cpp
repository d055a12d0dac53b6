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

#include <benchmark/benchmark.h>

#include <vector>

#include "loratwin/predictor.hpp"
#include "loratwin/rng.hpp"

namespace {

using namespace loratwin;

std::vector<DatasetRow> synthetic_rows(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, {99});
  std::vector<DatasetRow> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DatasetRow row;
    for (double& v : row.features.values) v = rng.uniform01() * 10.0;
    row.max_throughput_tok_s =
        50.0 * row.features.values[2] + 10.0 * row.features.values[5] + rng.normal(0.0, 5.0);
    row.n_star = 1 + static_cast<int>(rng.uniform_below(64));
    row.g_star = 1 + static_cast<int>(rng.uniform_below(16));
    row.condition_hash = rng.next_u64();
    rows.push_back(row);
  }
  return rows;
}

// Full three-target bundle prediction, the deployment-time hot path.
void bm_predict_bundle(benchmark::State& state) {
  const std::vector<DatasetRow> rows = synthetic_rows(1000, 1);
  ForestParams params;
  params.n_trees = static_cast<int>(state.range(0));
  params.tree.max_depth = 5;
  const PlacementModel model = train_placement_model(rows, params, 1, false);

  RngStream rng(2, {100});
  std::vector<WorkloadFeatures> probes(512);
  for (WorkloadFeatures& p : probes)
    for (double& v : p.values) v = rng.uniform01() * 10.0;

  std::size_t i = 0;
  for (auto _ : state) {
    const PlacementModel::Prediction p = model.predict(probes[i++ % probes.size()]);
    benchmark::DoNotOptimize(p.throughput_tok_s);
  }
}

void bm_train_forest(benchmark::State& state) {
  const std::vector<DatasetRow> rows = synthetic_rows(static_cast<std::size_t>(state.range(0)), 3);
  std::vector<WorkloadFeatures> x;
  std::vector<double> y;
  for (const DatasetRow& row : rows) {
    x.push_back(row.features);
    y.push_back(row.max_throughput_tok_s);
  }
  ForestParams params;
  params.n_trees = 10;
  params.tree.max_depth = 5;
  for (auto _ : state) {
    const ForestModel forest = train_forest(x, y, PredictTarget::Throughput, params, 7);
    benchmark::DoNotOptimize(forest.trees.size());
  }
}

BENCHMARK(bm_predict_bundle)->Arg(10)->Arg(50)->Unit(benchmark::kNanosecond);
BENCHMARK(bm_train_forest)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
