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

#include "loratwin/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "loratwin/errors.hpp"
#include "loratwin/estimators.hpp"
#include "loratwin/metrics.hpp"
#include "loratwin/rng.hpp"

namespace loratwin {

std::string to_string(PredictTarget target) {
  switch (target) {
    case PredictTarget::Throughput: return "throughput";
    case PredictTarget::NStar: return "n_star";
    case PredictTarget::GStar: return "g_star";
  }
  throw InternalError("unknown PredictTarget");
}

PredictTarget predict_target_from_string(const std::string& name) {
  if (name == "throughput") return PredictTarget::Throughput;
  if (name == "n_star") return PredictTarget::NStar;
  if (name == "g_star") return PredictTarget::GStar;
  throw ValidationError("unknown prediction target: \"" + name +
                        "\" (expected throughput, n_star or g_star)");
}

double target_value(const DatasetRow& row, PredictTarget target) {
  switch (target) {
    case PredictTarget::Throughput: return row.max_throughput_tok_s;
    case PredictTarget::NStar: return static_cast<double>(row.n_star);
    case PredictTarget::GStar: return static_cast<double>(row.g_star);
  }
  throw InternalError("unknown PredictTarget");
}

double DecisionTree::predict(const std::array<double, kNumFeatures>& x) const {
  if (nodes.empty()) throw InternalError("empty decision tree");
  int i = 0;
  for (;;) {
    const TreeNode& node = nodes[static_cast<std::size_t>(i)];
    if (node.feature_index < 0) return node.value;
    i = x[static_cast<std::size_t>(node.feature_index)] <= node.threshold ? node.left : node.right;
    if (i < 0) throw InternalError("decision tree has a dangling branch");
  }
}

namespace {

// Recursive CART builder over an index set into (x, y).
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<WorkloadFeatures>& x, const std::vector<double>& y,
              const TreeParams& params, std::uint64_t seed, std::uint64_t tree_tag)
      : x_(x), y_(y), params_(params), seed_(seed), tree_tag_(tree_tag) {}

  std::vector<TreeNode> build() {
    std::vector<std::size_t> idx(x_.size());
    std::iota(idx.begin(), idx.end(), 0);
    grow(idx, 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double sse = std::numeric_limits<double>::infinity();
  };

  int grow(std::vector<std::size_t>& idx, int depth) {
    const double n = static_cast<double>(idx.size());
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i : idx) {
      sum += y_[i];
      sumsq += y_[i] * y_[i];
    }
    const double mean = sum / n;
    const double sse = sumsq - sum * sum / n;

    const int node_id = static_cast<int>(nodes_.size());
    TreeNode node;
    node.value = mean;
    node.coverage = idx.size();
    nodes_.push_back(node);

    if (depth >= params_.max_depth || idx.size() < 2 * params_.min_leaf || sse <= 1e-12)
      return node_id;

    const Split split = best_split(idx, sse, node_id);
    if (!split.found) return node_id;

    std::vector<std::size_t> left, right;
    left.reserve(idx.size());
    right.reserve(idx.size());
    for (std::size_t i : idx) {
      (x_[i].values[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right)
          .push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    nodes_[static_cast<std::size_t>(node_id)].feature_index = split.feature;
    nodes_[static_cast<std::size_t>(node_id)].threshold = split.threshold;
    const int left_id = grow(left, depth + 1);
    nodes_[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = grow(right, depth + 1);
    nodes_[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }

  std::vector<int> candidate_features(int node_id) {
    std::vector<int> features(kNumFeatures);
    std::iota(features.begin(), features.end(), 0);
    if (params_.feature_subset >= kNumFeatures) return features;
    RngStream rng(seed_,
                  {stream_id::kFeatureSubset, tree_tag_, static_cast<std::uint64_t>(node_id)});
    rng.shuffle(features);
    features.resize(params_.feature_subset);
    std::sort(features.begin(), features.end());
    return features;
  }

  Split best_split(const std::vector<std::size_t>& idx, double parent_sse, int node_id) {
    Split best;
    const std::size_t n = idx.size();
    std::vector<std::size_t> order(idx);
    std::vector<double> psum(n + 1), psumsq(n + 1);

    for (int f : candidate_features(node_id)) {
      const std::size_t fi = static_cast<std::size_t>(f);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_[a].values[fi] < x_[b].values[fi];
      });
      for (std::size_t i = 0; i < n; ++i) {
        psum[i + 1] = psum[i] + y_[order[i]];
        psumsq[i + 1] = psumsq[i] + y_[order[i]] * y_[order[i]];
      }
      for (std::size_t s = params_.min_leaf; s + params_.min_leaf <= n; ++s) {
        const double lo = x_[order[s - 1]].values[fi];
        const double hi = x_[order[s]].values[fi];
        if (!(lo < hi)) continue;  // split only between distinct values
        const double ls = static_cast<double>(s);
        const double rs = static_cast<double>(n - s);
        const double left_sse = psumsq[s] - psum[s] * psum[s] / ls;
        const double right_sse =
            (psumsq[n] - psumsq[s]) - (psum[n] - psum[s]) * (psum[n] - psum[s]) / rs;
        const double total = left_sse + right_sse;
        // Strict < keeps the first optimum: lowest feature index, then
        // smallest threshold, since the scan is ascending in both.
        if (total < best.sse) {
          best.found = true;
          best.feature = f;
          best.threshold = lo + (hi - lo) / 2.0;
          best.sse = total;
        }
      }
    }
    if (best.found && best.sse >= parent_sse - 1e-12) best.found = false;
    return best;
  }

  const std::vector<WorkloadFeatures>& x_;
  const std::vector<double>& y_;
  TreeParams params_;
  std::uint64_t seed_;
  std::uint64_t tree_tag_;
  std::vector<TreeNode> nodes_;
};

void validate_training_input(const std::vector<WorkloadFeatures>& x,
                             const std::vector<double>& y) {
  if (x.empty()) throw ValidationError("training set is empty");
  if (x.size() != y.size())
    throw ValidationError("training features and targets differ in length (" +
                          std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
}

}  // namespace

DecisionTree train_tree(const std::vector<WorkloadFeatures>& x, const std::vector<double>& y,
                        const TreeParams& params, std::uint64_t seed, std::uint64_t tree_tag) {
  validate_training_input(x, y);
  if (params.max_depth < 0) throw ValidationError("tree.max_depth: must be >= 0");
  if (params.min_leaf < 1) throw ValidationError("tree.min_leaf: must be >= 1");
  if (params.feature_subset < 1 || params.feature_subset > kNumFeatures)
    throw ValidationError("tree.feature_subset: must be in [1, " +
                          std::to_string(kNumFeatures) + "]");
  DecisionTree tree;
  tree.nodes = TreeBuilder(x, y, params, seed, tree_tag).build();
  return tree;
}

double ForestModel::predict_raw(const WorkloadFeatures& features) const {
  if (trees.empty()) throw InternalError("forest has no trees");
  double sum = 0.0;
  for (const DecisionTree& tree : trees) sum += tree.predict(features.values);
  return sum / static_cast<double>(trees.size());
}

double ForestModel::predict(const WorkloadFeatures& features) const {
  const double raw = predict_raw(features);
  if (target == PredictTarget::Throughput) return std::max(raw, 0.0);
  return std::max(1.0, std::round(raw));
}

ForestModel train_forest(const std::vector<WorkloadFeatures>& x, const std::vector<double>& y,
                         PredictTarget target, const ForestParams& params, std::uint64_t seed) {
  validate_training_input(x, y);
  if (params.n_trees < 1) throw ValidationError("forest.n_trees: must be >= 1");

  ForestModel model;
  model.target = target;
  model.params = params;
  model.seed = seed;
  model.trained_rows = x.size();
  const auto& names = WorkloadFeatures::names();
  model.feature_names.assign(names.begin(), names.end());

  const std::uint64_t target_tag = static_cast<std::uint64_t>(target);
  for (int t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_tag = target_tag * 1000003ull + static_cast<std::uint64_t>(t);
    if (params.bootstrap) {
      RngStream rng(seed, {stream_id::kBootstrap, target_tag, static_cast<std::uint64_t>(t)});
      std::vector<WorkloadFeatures> xb(x.size());
      std::vector<double> yb(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_below(x.size()));
        xb[i] = x[j];
        yb[i] = y[j];
      }
      model.trees.push_back(train_tree(xb, yb, params.tree, seed, tree_tag));
    } else {
      model.trees.push_back(train_tree(x, y, params.tree, seed, tree_tag));
    }
  }
  return model;
}

PlacementModel::Prediction PlacementModel::predict(const WorkloadFeatures& features) const {
  Prediction p;
  p.throughput_tok_s = throughput.predict(features);
  p.n_star = static_cast<int>(n_star.predict(features));
  p.g_star = static_cast<int>(g_star.predict(features));
  return p;
}

PlacementModel train_placement_model(const std::vector<DatasetRow>& rows,
                                     const ForestParams& params, std::uint64_t seed,
                                     bool exclude_starved) {
  std::vector<WorkloadFeatures> x;
  std::vector<double> y_tput, y_n, y_g;
  for (const DatasetRow& row : rows) {
    if (exclude_starved && row.all_starved) continue;
    x.push_back(row.features);
    y_tput.push_back(row.max_throughput_tok_s);
    y_n.push_back(static_cast<double>(row.n_star));
    y_g.push_back(static_cast<double>(row.g_star));
  }
  if (x.empty())
    throw ValidationError("no trainable rows (every dataset row is marked all-starved)");

  PlacementModel model;
  model.throughput = train_forest(x, y_tput, PredictTarget::Throughput, params, seed);
  model.n_star = train_forest(x, y_n, PredictTarget::NStar, params, seed);
  model.g_star = train_forest(x, y_g, PredictTarget::GStar, params, seed);
  return model;
}

namespace {

void collect_rules(const DecisionTree& tree, int node_id, std::vector<RulePredicate>& path,
                   std::vector<Rule>& out) {
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
  if (node.feature_index < 0) {
    out.push_back(Rule{path, node.value, node.coverage});
    return;
  }
  path.push_back(RulePredicate{node.feature_index, true, node.threshold});
  collect_rules(tree, node.left, path, out);
  path.back().is_upper = false;
  collect_rules(tree, node.right, path, out);
  path.pop_back();
}

}  // namespace

std::vector<Rule> extract_rules(const DecisionTree& tree) {
  std::vector<Rule> rules;
  if (tree.nodes.empty()) return rules;
  std::vector<RulePredicate> path;
  collect_rules(tree, 0, path, rules);
  return rules;
}

std::string format_rule(const Rule& rule, const std::array<std::string, kNumFeatures>& names,
                        int precision) {
  std::ostringstream out;
  out.precision(precision);
  out << "IF ";
  if (rule.predicates.empty()) {
    out << "TRUE";
  } else {
    for (std::size_t i = 0; i < rule.predicates.size(); ++i) {
      const RulePredicate& p = rule.predicates[i];
      if (i > 0) out << " AND ";
      out << names[static_cast<std::size_t>(p.feature_index)]
          << (p.is_upper ? " <= " : " > ") << p.threshold;
    }
  }
  out << " THEN " << rule.value << "  [covers " << rule.coverage << " rows]";
  return out.str();
}

double LinearBaseline::predict(const WorkloadFeatures& features) const {
  double v = intercept;
  for (std::size_t i = 0; i < kNumFeatures; ++i) v += coefficients[i] * features.values[i];
  return v;
}

LinearBaseline fit_linear_baseline(const std::vector<WorkloadFeatures>& x,
                                   const std::vector<double>& y) {
  validate_training_input(x, y);

  LinearBaseline model;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    double lo = x.front().values[f], hi = lo;
    for (const WorkloadFeatures& row : x) {
      lo = std::min(lo, row.values[f]);
      hi = std::max(hi, row.values[f]);
    }
    if (hi > lo) model.used_features.push_back(static_cast<int>(f));
  }

  std::vector<std::vector<double>> rows(x.size());
  std::vector<std::string> col_names;
  for (int f : model.used_features) col_names.push_back(WorkloadFeatures::names()[static_cast<std::size_t>(f)]);
  col_names.push_back("intercept");
  for (std::size_t i = 0; i < x.size(); ++i) {
    rows[i].reserve(model.used_features.size() + 1);
    for (int f : model.used_features) rows[i].push_back(x[i].values[static_cast<std::size_t>(f)]);
    rows[i].push_back(1.0);
  }

  const std::vector<double> coef = fit_linear(rows, y, col_names);
  for (std::size_t k = 0; k < model.used_features.size(); ++k)
    model.coefficients[static_cast<std::size_t>(model.used_features[k])] = coef[k];
  model.intercept = coef.back();
  return model;
}

RegressionEval evaluate_predictions(const std::vector<double>& predicted,
                                    const std::vector<double>& actual) {
  if (predicted.size() != actual.size())
    throw ValidationError("prediction/actual length mismatch (" +
                          std::to_string(predicted.size()) + " vs " +
                          std::to_string(actual.size()) + ")");
  if (predicted.empty()) throw ValidationError("cannot evaluate an empty prediction set");

  RegressionEval eval;
  eval.n = predicted.size();
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  eval.mae = abs_sum / static_cast<double>(eval.n);
  eval.rmse = std::sqrt(sq_sum / static_cast<double>(eval.n));
  eval.smape = smape(predicted, actual);
  return eval;
}

DatasetSplit split_by_hash(const std::vector<DatasetRow>& rows, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ValidationError("test_fraction: must be in [0, 1)");
  const std::uint64_t threshold =
      static_cast<std::uint64_t>(test_fraction * 4294967296.0);  // 2^32
  DatasetSplit split;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if ((rows[i].condition_hash >> 32) < threshold)
      split.test_indices.push_back(i);
    else
      split.train_indices.push_back(i);
  }
  return split;
}

}  // namespace loratwin
