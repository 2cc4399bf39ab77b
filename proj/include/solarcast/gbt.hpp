#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace solarcast {

struct GbtParams {
  int n_trees = 100;
  int max_depth = 3;
  double shrinkage = 0.1;
  int min_leaf = 5;

  void validate() const;
};

// Internal nodes route x[feature] <= threshold to `left`. Leaves have feature -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int depth() const;
};

struct GbtModel {
  double base = 0.0;  // training target mean
  double shrinkage = 1.0;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;
  // Prediction using only the first k trees.
  double predict_staged(std::span<const double> x, std::size_t k) const;
};

// Exact greedy least-squares tree: every split between consecutive distinct
// sorted values is scored by variance reduction; each child keeps >= min_leaf
// rows. Rows of `x` are samples.
RegressionTree fit_regression_tree(const Eigen::MatrixXd& x, std::span<const double> target, int max_depth,
                                   int min_leaf);

// Stage-wise boosting on squared loss, starting from the target mean.
// Needs >= 2 * min_leaf samples.
GbtModel fit_gbt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbtParams& params);

}  // namespace solarcast
