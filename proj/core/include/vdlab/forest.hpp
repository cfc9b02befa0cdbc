#pragma once

#include <cstdint>
#include <vector>

#include "vdlab/matrix.hpp"

namespace vdlab {

struct ForestParams {
  int n_trees = 30;
  int max_depth = 20;
  int min_leaf = 5;
  int feature_subsample = 0;  // 0: floor(sqrt(n_features))
  std::uint64_t seed = 1;
};

// Internal node: feature/threshold/children. Leaf: feature < 0, prob set.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double prob = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(const double* row) const;
};

struct ForestModel {
  ForestParams params;
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;
};

double gini_impurity(std::size_t pos, std::size_t neg);

// Bootstrap-per-tree CART with greedy Gini splits over a random feature
// subset per split. Per-tree RNG streams are derived from the seed, so the
// result is byte-identical regardless of `jobs`.
ForestModel forest_train(const Matrix& rows, const std::vector<std::uint8_t>& labels,
                         const ForestParams& params, int jobs = 1);

// Mean of per-tree leaf probabilities.
std::vector<double> forest_predict(const ForestModel& model, const Matrix& rows);

double forest_predict_row(const ForestModel& model, const double* row);

}  // namespace vdlab
