#include <algorithm>
#include <cmath>
#include <numeric>

#include "llambo/surrogate.hpp"

namespace llambo {

namespace {

// Grows one CART regression tree (variance-reduction splits, min leaf 1,
// per-node feature subsampling of ceil(d/3)).  All tie-breaking is by first
// occurrence, so the tree is a deterministic function of (data, rng stream).
struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  Rng& rng;
  int n_sub;  // features considered per node
  std::vector<TreeNode> nodes;

  int grow(const std::vector<int>& idx) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    double sum = 0.0;
    for (int i : idx) sum += y[i];
    const double mean = sum / static_cast<double>(idx.size());
    nodes[static_cast<std::size_t>(node_id)].value = mean;
    if (idx.size() < 2) return node_id;

    bool constant = true;
    for (int i : idx)
      if (y[i] != y[idx[0]]) {
        constant = false;
        break;
      }
    if (constant) return node_id;

    // Candidate features for this node.
    const std::vector<int> perm = rng.permutation(static_cast<int>(X.cols()));
    double best_sse = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<int> order(idx);
    for (int f_pos = 0; f_pos < n_sub; ++f_pos) {
      const int f = perm[static_cast<std::size_t>(f_pos)];
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return X(a, f) < X(b, f); });
      // Prefix sums let every split position be scored in O(1).
      double left_sum = 0.0, left_sq = 0.0;
      double total_sum = 0.0, total_sq = 0.0;
      for (int i : order) {
        total_sum += y[i];
        total_sq += y[i] * y[i];
      }
      const int n = static_cast<int>(order.size());
      for (int k = 1; k < n; ++k) {
        const int prev = order[static_cast<std::size_t>(k - 1)];
        left_sum += y[prev];
        left_sq += y[prev] * y[prev];
        if (X(prev, f) == X(order[static_cast<std::size_t>(k)], f)) continue;
        const double right_sum = total_sum - left_sum;
        const double right_sq = total_sq - left_sq;
        const double sse = (left_sq - left_sum * left_sum / k) +
                           (right_sq - right_sum * right_sum / (n - k));
        if (sse < best_sse) {
          best_sse = sse;
          best_feature = f;
          best_threshold =
              0.5 * (X(prev, f) + X(order[static_cast<std::size_t>(k)], f));
        }
      }
    }
    if (best_feature < 0) return node_id;  // no feature in the subset separates the rows

    std::vector<int> left, right;
    for (int i : idx)
      (X(i, best_feature) <= best_threshold ? left : right).push_back(i);
    if (left.empty() || right.empty()) return node_id;

    nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
    nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    const int l = grow(left);
    nodes[static_cast<std::size_t>(node_id)].left = l;
    const int r = grow(right);
    nodes[static_cast<std::size_t>(node_id)].right = r;
    return node_id;
  }
};

}  // namespace

double tree_predict(const Tree& tree, const Eigen::VectorXd& u) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    node = u[n.feature] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].value;
}

ForestModel forest_fit(const std::vector<UnitPoint>& points, const std::vector<double>& scores,
                       int n_trees, std::uint64_t seed, Exec exec) {
  if (points.size() < 2) throw ValidationError("forest_fit needs at least 2 observations");
  if (points.size() != scores.size())
    throw ValidationError("forest_fit: points and scores must have equal length");
  if (n_trees < 2) throw ValidationError("forest_fit needs at least 2 trees");

  const int n = static_cast<int>(points.size());
  const int d = static_cast<int>(points[0].dim());
  ForestModel model;
  model.X.resize(n, d);
  model.y.resize(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(points[static_cast<std::size_t>(i)].dim()) != d)
      throw ValidationError("forest_fit: inconsistent point dimensions");
    model.X.row(i) = points[static_cast<std::size_t>(i)].coords.transpose();
    model.y[i] = scores[static_cast<std::size_t>(i)];
  }

  const int n_sub = (d + 2) / 3;  // ceil(d/3)
  model.trees.resize(static_cast<std::size_t>(n_trees));
  // Each tree owns a derived seed, so the forest is identical under any
  // thread count.
  parallel_for(exec, n_trees, [&](std::ptrdiff_t t) {
    Rng rng(mix_seed(seed, 0xf0e0 + static_cast<std::uint64_t>(t)));
    Tree& tree = model.trees[static_cast<std::size_t>(t)];
    tree.inbag.assign(static_cast<std::size_t>(n), 0);
    std::vector<int> sample(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int row = static_cast<int>(rng.uniform_int(0, n - 1));
      sample[static_cast<std::size_t>(i)] = row;
      tree.inbag[static_cast<std::size_t>(row)] += 1;
    }
    TreeBuilder builder{model.X, model.y, rng, n_sub, {}};
    builder.grow(sample);
    tree.nodes = std::move(builder.nodes);
  });
  return model;
}

PredictiveDistribution forest_predict(const ForestModel& m, const UnitPoint& u) {
  if (m.trees.size() < 2) throw ValidationError("forest_predict needs a fitted model");
  const auto n = static_cast<double>(m.trees.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const Tree& tree : m.trees) {
    const double p = tree_predict(tree, u.coords);
    sum += p;
    sum_sq += p * p;
  }
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  return {mean, std::max(std::sqrt(var), 1e-6)};
}

}  // namespace llambo
