#include "vdlab/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vdlab/errors.hpp"
#include "vdlab/parallel.hpp"
#include "vdlab/rng.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

double gini_impurity(std::size_t pos, std::size_t neg) {
  const std::size_t total = pos + neg;
  if (total == 0) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

double DecisionTree::predict(const double* row) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].prob;
}

namespace {

struct SplitResult {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

struct TreeBuilder {
  const Matrix& rows;
  const std::vector<std::uint8_t>& labels;
  const ForestParams& params;
  int n_sub;
  std::uint64_t tree_seed;
  DecisionTree tree;

  // Sorted (value, index) pairs reused across nodes.
  std::vector<std::pair<double, std::size_t>> sorted;

  // `path` is the heap-style node path (root 1, children 2i and 2i+1). The
  // per-node RNG is derived from it, so raising max_depth extends a tree
  // without changing any of its existing splits.
  int build(std::vector<std::size_t>& samples, int depth, std::uint64_t path) {
    std::size_t pos = 0;
    for (std::size_t i : samples) pos += labels[i];
    const std::size_t neg = samples.size() - pos;

    const bool pure = pos == 0 || neg == 0;
    const bool too_deep = depth >= params.max_depth;
    const bool too_small = samples.size() < 2 * static_cast<std::size_t>(params.min_leaf);
    SplitResult best;
    if (!pure && !too_deep && !too_small) best = find_split(samples, pos, path);

    if (best.feature < 0) {
      TreeNode leaf;
      leaf.prob = samples.empty() ? 0.0
                                  : static_cast<double>(pos) / static_cast<double>(samples.size());
      tree.nodes.push_back(leaf);
      return static_cast<int>(tree.nodes.size()) - 1;
    }

    std::vector<std::size_t> left_samples, right_samples;
    left_samples.reserve(samples.size());
    right_samples.reserve(samples.size());
    for (std::size_t i : samples) {
      if (rows(i, static_cast<std::size_t>(best.feature)) <= best.threshold) {
        left_samples.push_back(i);
      } else {
        right_samples.push_back(i);
      }
    }
    samples.clear();
    samples.shrink_to_fit();

    const int node_index = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.feature = best.feature;
    node.threshold = best.threshold;
    tree.nodes.push_back(node);
    const int left = build(left_samples, depth + 1, 2 * path);
    const int right = build(right_samples, depth + 1, 2 * path + 1);
    tree.nodes[static_cast<std::size_t>(node_index)].left = left;
    tree.nodes[static_cast<std::size_t>(node_index)].right = right;
    return node_index;
  }

  SplitResult find_split(const std::vector<std::size_t>& samples, std::size_t total_pos,
                         std::uint64_t path) {
    Rng rng = Rng::derive(tree_seed, path);
    const std::size_t n_features = rows.cols();
    // Random feature subset without replacement (partial Fisher-Yates).
    std::vector<std::size_t> feats(n_features);
    std::iota(feats.begin(), feats.end(), 0);
    for (int k = 0; k < n_sub; ++k) {
      const std::size_t j = k + rng.index(n_features - static_cast<std::size_t>(k));
      std::swap(feats[static_cast<std::size_t>(k)], feats[j]);
    }

    SplitResult best;
    const std::size_t total = samples.size();
    const std::size_t total_neg = total - total_pos;
    for (int k = 0; k < n_sub; ++k) {
      const std::size_t f = feats[static_cast<std::size_t>(k)];
      sorted.clear();
      for (std::size_t i : samples) sorted.emplace_back(rows(i, f), i);
      std::sort(sorted.begin(), sorted.end());

      std::size_t left_pos = 0;
      for (std::size_t s = 0; s + 1 < sorted.size(); ++s) {
        left_pos += labels[sorted[s].second];
        const std::size_t left_n = s + 1;
        if (sorted[s].first == sorted[s + 1].first) continue;  // no boundary here
        const std::size_t right_n = total - left_n;
        if (left_n < static_cast<std::size_t>(params.min_leaf) ||
            right_n < static_cast<std::size_t>(params.min_leaf)) {
          continue;
        }
        const std::size_t right_pos = total_pos - left_pos;
        const double impurity =
            (static_cast<double>(left_n) * gini_impurity(left_pos, left_n - left_pos) +
             static_cast<double>(right_n) * gini_impurity(right_pos, right_n - right_pos)) /
            static_cast<double>(total);
        if (impurity < best.impurity - 1e-15) {
          best.impurity = impurity;
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (sorted[s].first + sorted[s + 1].first);
        }
      }
    }
    // A split that does not beat the parent impurity is not worth taking.
    if (best.feature >= 0 &&
        best.impurity >= gini_impurity(total_pos, total_neg) - 1e-15) {
      best.feature = -1;
    }
    return best;
  }
};

}  // namespace

ForestModel forest_train(const Matrix& rows, const std::vector<std::uint8_t>& labels,
                         const ForestParams& params, int jobs) {
  if (rows.rows() == 0 || rows.cols() == 0) throw ValueError("forest_train: empty matrix");
  if (rows.rows() != labels.size()) {
    throw ValueError("forest_train: row/label count mismatch");
  }
  std::size_t pos = 0;
  for (std::uint8_t l : labels) pos += l;
  if (pos == 0 || pos == labels.size()) {
    throw ValueError("forest_train: training data has a single class");
  }
  if (params.n_trees <= 0) throw ValueError("forest_train: n_trees must be positive");
  for (double v : rows.data()) {
    if (!std::isfinite(v)) throw ValueError("forest_train: non-finite feature value");
  }

  ForestModel model;
  model.params = params;
  model.n_features = rows.cols();
  model.trees.resize(static_cast<std::size_t>(params.n_trees));

  const int n_sub = params.feature_subsample > 0
                        ? std::min<int>(params.feature_subsample, static_cast<int>(rows.cols()))
                        : std::max(1, static_cast<int>(std::sqrt(
                              static_cast<double>(rows.cols()))));

  parallel_for(model.trees.size(), jobs, [&](std::size_t t) {
    const std::uint64_t tree_seed = splitmix64(params.seed) ^ splitmix64(t);
    TreeBuilder builder{rows, labels, params, n_sub, tree_seed, {}, {}};
    Rng bootstrap_rng = Rng::derive(tree_seed, 0);
    std::vector<std::size_t> bootstrap(rows.rows());
    for (std::size_t i = 0; i < bootstrap.size(); ++i) {
      bootstrap[i] = bootstrap_rng.index(rows.rows());
    }
    builder.build(bootstrap, 0, 1);
    model.trees[t] = std::move(builder.tree);
  });
  return model;
}

std::vector<double> forest_predict(const ForestModel& model, const Matrix& rows) {
  if (rows.cols() != model.n_features) {
    throw ValueError(strfmt("forest_predict: row width %zu != training width %zu",
                            rows.cols(), model.n_features));
  }
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    out[i] = forest_predict_row(model, rows.row(i));
  }
  return out;
}

double forest_predict_row(const ForestModel& model, const double* row) {
  double acc = 0.0;
  for (const DecisionTree& tree : model.trees) acc += tree.predict(row);
  return acc / static_cast<double>(model.trees.size());
}

}  // namespace vdlab
