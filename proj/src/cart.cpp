#include "stackliver/cart.hpp"

#include <algorithm>
#include <vector>

#include "stackliver/error.hpp"

namespace stackliver {

namespace {

double gini(std::int64_t n, std::int64_t ones) {
  const double p1 = static_cast<double>(ones) / static_cast<double>(n);
  const double p0 = 1.0 - p1;
  return 1.0 - p1 * p1 - p0 * p0;
}

struct BestSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double decrease = -1.0;
  std::int64_t n_left = 0;
};

struct WorkItem {
  int node = 0;
  int depth = 0;
  std::vector<Eigen::Index> rows;
};

}  // namespace

CartResult fit_cart(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const CartParams& params,
                    Rng& rng) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n == 0 || d == 0) fail(ErrorCode::EmptyInput, "fit_cart needs data");
  if (y.size() != n) fail(ErrorCode::LengthMismatch, "X and y differ in length");

  CartResult result;
  result.importances = Eigen::VectorXd::Zero(d);
  auto& nodes = result.tree.nodes;

  const int min_leaf = params.min_samples_leaf < 1 ? 1 : params.min_samples_leaf;
  const double total = static_cast<double>(n);

  std::vector<WorkItem> stack;
  {
    WorkItem root;
    root.node = 0;
    root.rows.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) root.rows[static_cast<std::size_t>(i)] = i;
    nodes.emplace_back();
    stack.push_back(std::move(root));
  }

  std::vector<std::pair<double, int>> sorted;  // (value, label) within the node
  while (!stack.empty()) {
    WorkItem item = std::move(stack.back());
    stack.pop_back();
    const auto& rows = item.rows;
    const auto m = static_cast<std::int64_t>(rows.size());

    std::int64_t ones = 0;
    for (const auto r : rows) ones += y[r];
    TreeNode& node = nodes[static_cast<std::size_t>(item.node)];
    node.n_samples = m;
    node.value = static_cast<double>(ones) / static_cast<double>(m);

    const bool depth_ok = params.max_depth < 0 || item.depth < params.max_depth;
    if (!depth_ok || ones == 0 || ones == m || m < 2 * min_leaf) continue;

    // Candidate features, ascending.
    std::vector<int> features;
    if (params.max_features > 0 && params.max_features < d) {
      for (const auto f :
           rng.sample_without_replacement(static_cast<std::size_t>(d),
                                          static_cast<std::size_t>(params.max_features)))
        features.push_back(static_cast<int>(f));
    } else {
      for (int f = 0; f < d; ++f) features.push_back(f);
    }

    const double parent_impurity = gini(m, ones);
    BestSplit best;
    for (const int f : features) {
      sorted.clear();
      sorted.reserve(rows.size());
      for (const auto r : rows) sorted.emplace_back(X(r, f), y[r]);
      std::sort(sorted.begin(), sorted.end());

      std::int64_t left_n = 0, left_ones = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        ++left_n;
        left_ones += sorted[i].second;
        if (sorted[i].first == sorted[i + 1].first) continue;  // no boundary here
        const std::int64_t right_n = m - left_n;
        if (left_n < min_leaf || right_n < min_leaf) continue;
        const std::int64_t right_ones = ones - left_ones;
        const double wl = static_cast<double>(left_n) / static_cast<double>(m);
        const double wr = static_cast<double>(right_n) / static_cast<double>(m);
        const double decrease =
            parent_impurity - wl * gini(left_n, left_ones) - wr * gini(right_n, right_ones);
        // Any valid candidate splits an impure node (zero-decrease splits
        // included, so parity patterns still get solved); ties keep the
        // lowest feature index, then the lowest threshold.
        if (decrease > best.decrease) {
          best.found = true;
          best.feature = f;
          best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
          best.decrease = decrease;
          best.n_left = left_n;
        }
      }
    }
    if (!best.found) continue;

    result.importances[best.feature] +=
        (static_cast<double>(m) / total) * std::max(best.decrease, 0.0);

    WorkItem left, right;
    left.depth = right.depth = item.depth + 1;
    for (const auto r : rows) {
      (X(r, best.feature) <= best.threshold ? left.rows : right.rows).push_back(r);
    }
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = static_cast<int>(nodes.size());
    node.right = node.left + 1;
    left.node = node.left;
    right.node = node.right;
    nodes.emplace_back();
    nodes.emplace_back();
    // Preorder: left subtree is processed (and consumes rng) before right.
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return result;
}

}  // namespace stackliver
