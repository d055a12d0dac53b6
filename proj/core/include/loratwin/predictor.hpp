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
#include <string>
#include <vector>

#include "loratwin/placement.hpp"

namespace loratwin {

// What a placement model predicts from workload features.
enum class PredictTarget { Throughput, NStar, GStar };

std::string to_string(PredictTarget target);
PredictTarget predict_target_from_string(const std::string& name);

// Reads the target column out of a dataset row.
double target_value(const DatasetRow& row, PredictTarget target);

// --- Decision trees ------------------------------------------------------

// feature_index == -1 marks a leaf; internal nodes route x[feature_index]
// <= threshold to `left`, else `right`.
struct TreeNode {
  int feature_index = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;        // mean target of the training rows here
  std::size_t coverage = 0;  // training rows that reached this node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const std::array<double, kNumFeatures>& x) const;
};

struct TreeParams {
  int max_depth = 5;          // root is depth 0
  std::size_t min_leaf = 2;   // minimum rows on each side of a split
  // Features considered per node. The default (all of them) makes the
  // trees deterministic without touching the RNG; smaller values sample a
  // per-node subset from the tree's stream.
  std::size_t feature_subset = kNumFeatures;
};

// CART regression: greedy variance-reduction splits at midpoints between
// distinct sorted values. Ties break toward the lowest feature index, then
// the smallest threshold. `tree_tag` keys the feature-subset substream so
// every tree of a forest samples independently.
DecisionTree train_tree(const std::vector<WorkloadFeatures>& x, const std::vector<double>& y,
                        const TreeParams& params, std::uint64_t seed = 0,
                        std::uint64_t tree_tag = 0);

// --- Random forests ------------------------------------------------------

struct ForestParams {
  int n_trees = 10;
  TreeParams tree;
  bool bootstrap = true;  // same-size resample with replacement per tree
};

struct ForestModel {
  PredictTarget target = PredictTarget::Throughput;
  ForestParams params;
  std::vector<DecisionTree> trees;

  // Training provenance, carried into the model file.
  std::uint64_t seed = 0;
  std::size_t trained_rows = 0;
  std::vector<std::string> feature_names;  // WorkloadFeatures::names() order

  // Mean of the per-tree predictions.
  double predict_raw(const WorkloadFeatures& features) const;
  // Target-aware: NStar/GStar are rounded to the nearest integer and
  // clamped to >= 1; Throughput is clamped to >= 0.
  double predict(const WorkloadFeatures& features) const;
};

ForestModel train_forest(const std::vector<WorkloadFeatures>& x, const std::vector<double>& y,
                         PredictTarget target, const ForestParams& params, std::uint64_t seed);

// --- Bundled placement model ---------------------------------------------

// Three single-target forests trained on the same rows. `exclude_starved`
// drops rows whose whole sweep starved (their optima are degenerate).
struct PlacementModel {
  ForestModel throughput;
  ForestModel n_star;
  ForestModel g_star;

  struct Prediction {
    double throughput_tok_s = 0.0;
    int n_star = 0;
    int g_star = 0;
  };
  Prediction predict(const WorkloadFeatures& features) const;
};

PlacementModel train_placement_model(const std::vector<DatasetRow>& rows,
                                     const ForestParams& params, std::uint64_t seed,
                                     bool exclude_starved = true);

// --- Interpretability -----------------------------------------------------

// One root-to-leaf path: the conjunction of its split predicates.
struct RulePredicate {
  int feature_index = 0;
  bool is_upper = false;  // true: feature <= threshold, false: feature > threshold
  double threshold = 0.0;
};

struct Rule {
  std::vector<RulePredicate> predicates;
  double value = 0.0;
  std::size_t coverage = 0;  // training rows at the leaf
};

// All leaf rules of a tree, in depth-first (left-first) order.
std::vector<Rule> extract_rules(const DecisionTree& tree);

// "IF rate_mean <= 0.25 AND rank_max > 48 THEN 812.4  [covers 17 rows]"
std::string format_rule(const Rule& rule, const std::array<std::string, kNumFeatures>& names,
                        int precision = 4);

// --- Linear baseline ------------------------------------------------------

// Ordinary least squares on the raw features plus an intercept. Constant
// feature columns are dropped before fitting (their weight stays 0), since
// they would make the normal equations singular on gridded datasets.
struct LinearBaseline {
  std::array<double, kNumFeatures> coefficients{};
  double intercept = 0.0;
  std::vector<int> used_features;  // indices that survived the variance filter

  double predict(const WorkloadFeatures& features) const;
};

LinearBaseline fit_linear_baseline(const std::vector<WorkloadFeatures>& x,
                                   const std::vector<double>& y);

// --- Evaluation -----------------------------------------------------------

struct RegressionEval {
  std::size_t n = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double smape = 0.0;  // symmetric MAPE in percent; 0/0 pairs skipped
};

RegressionEval evaluate_predictions(const std::vector<double>& predicted,
                                    const std::vector<double>& actual);

// Deterministic holdout: a row lands in the test set iff the top 32 bits
// of its condition hash fall below `test_fraction` of the range. The split
// is a property of the row, so it survives dataset regeneration and
// resharding.
struct DatasetSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

DatasetSplit split_by_hash(const std::vector<DatasetRow>& rows, double test_fraction);

}  // namespace loratwin
