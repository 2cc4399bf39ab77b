#include "solarcast/gbt.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "solarcast/errors.hpp"

namespace solarcast {

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, std::span<const double> target, int max_depth, int min_leaf)
      : x_(x), target_(target), max_depth_(max_depth), min_leaf_(min_leaf),
        goes_left_(static_cast<std::size_t>(x.rows()), 0) {}

  RegressionTree run() {
    std::vector<std::vector<int>> sorted(static_cast<std::size_t>(x_.cols()));
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      auto& order = sorted[static_cast<std::size_t>(f)];
      order.resize(static_cast<std::size_t>(x_.rows()));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x_(a, f) < x_(b, f); });
    }
    if (sorted.empty()) {
      // No features: a single leaf at the mean.
      std::vector<int> rows(static_cast<std::size_t>(x_.rows()));
      std::iota(rows.begin(), rows.end(), 0);
      sorted.push_back(rows);
      no_features_ = true;
    }
    build(sorted, 0);
    return std::move(tree_);
  }

 private:
  int build(const std::vector<std::vector<int>>& sorted, int depth) {
    const auto& rows = sorted.front();
    const auto n = static_cast<int>(rows.size());
    double sum = 0.0;
    for (int r : rows) sum += target_[static_cast<std::size_t>(r)];

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, n > 0 ? sum / n : 0.0});
    if (no_features_ || depth >= max_depth_ || n < 2 * min_leaf_) return id;

    const double parent_score = sum * sum / n;
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto& order = sorted[f];
      double left = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        left += target_[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        const int n_left = i + 1;
        const int n_right = n - n_left;
        if (n_left < min_leaf_) continue;
        if (n_right < min_leaf_) break;
        const double v = x_(order[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(f));
        const double v_next = x_(order[static_cast<std::size_t>(i) + 1], static_cast<Eigen::Index>(f));
        if (!(v < v_next)) continue;
        const double right = sum - left;
        const double gain = left * left / n_left + right * right / n_right - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          double mid = 0.5 * (v + v_next);
          if (!(mid < v_next)) mid = v;
          best_threshold = mid;
        }
      }
    }
    const double tolerance = 1e-12 * std::max(1.0, std::abs(parent_score));
    if (best_feature < 0 || best_gain <= tolerance) return id;

    for (int r : rows) {
      goes_left_[static_cast<std::size_t>(r)] = x_(r, best_feature) <= best_threshold;
    }
    std::vector<std::vector<int>> left_sorted(sorted.size()), right_sorted(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (int r : sorted[f]) (goes_left_[static_cast<std::size_t>(r)] ? left_sorted[f] : right_sorted[f]).push_back(r);
    }
    const int left_id = build(left_sorted, depth + 1);
    const int right_id = build(right_sorted, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left_id;
    node.right = right_id;
    return id;
  }

  const Eigen::MatrixXd& x_;
  std::span<const double> target_;
  int max_depth_;
  int min_leaf_;
  std::vector<char> goes_left_;
  bool no_features_ = false;
  RegressionTree tree_;
};

}  // namespace

void GbtParams::validate() const {
  if (max_depth < 1) throw ParameterError("max_depth must be >= 1");
  if (n_trees < 0) throw ParameterError("n_trees must be >= 0");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ParameterError("shrinkage must lie in (0, 1]");
  if (min_leaf < 1) throw ParameterError("min_leaf must be >= 1");
}

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

double GbtModel::predict(std::span<const double> x) const { return predict_staged(x, trees.size()); }

double GbtModel::predict_staged(std::span<const double> x, std::size_t k) const {
  double out = base;
  for (std::size_t i = 0; i < std::min(k, trees.size()); ++i) out += shrinkage * trees[i].predict(x);
  return out;
}

RegressionTree fit_regression_tree(const Eigen::MatrixXd& x, std::span<const double> target, int max_depth,
                                   int min_leaf) {
  if (max_depth < 1) throw ParameterError("max_depth must be >= 1");
  if (static_cast<std::size_t>(x.rows()) != target.size()) throw ParameterError("design and target sizes differ");
  if (x.rows() == 0) throw ParameterError("cannot fit a tree on no samples");
  return TreeBuilder(x, target, max_depth, min_leaf).run();
}

GbtModel fit_gbt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbtParams& params) {
  params.validate();
  if (x.rows() != y.size()) throw ParameterError("design and target sizes differ");
  if (x.rows() < 2 * params.min_leaf) {
    throw ParameterError("gradient boosting needs at least " + std::to_string(2 * params.min_leaf) + " samples");
  }
  GbtModel model;
  model.base = y.mean();
  model.shrinkage = params.shrinkage;
  std::vector<double> residual(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) residual[static_cast<std::size_t>(i)] = y[i] - model.base;

  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (int t = 0; t < params.n_trees; ++t) {
    RegressionTree tree = fit_regression_tree(x, residual, params.max_depth, params.min_leaf);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
      residual[static_cast<std::size_t>(i)] -= params.shrinkage * tree.predict(row);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace solarcast
