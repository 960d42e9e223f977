#include "stackliver/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <tuple>
#include <vector>

#include "stackliver/error.hpp"

namespace stackliver {

namespace {

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double logloss(const Eigen::VectorXi& y, const Eigen::VectorXd& scores) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = std::clamp(sigmoid(scores[i]), 1e-12, 1.0 - 1e-12);
    loss -= y[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss / static_cast<double>(y.size());
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Totals are node-level (G, H) accumulated in a canonical order so that the
// search result does not depend on the input row order.
struct NodeStats {
  double g = 0.0;
  double h = 0.0;
};

NodeStats canonical_totals(const std::vector<Eigen::Index>& rows, const Eigen::VectorXd& grad,
                           const Eigen::VectorXd& hess) {
  std::vector<std::pair<double, double>> gh;
  gh.reserve(rows.size());
  for (const auto r : rows) gh.emplace_back(grad[r], hess[r]);
  std::sort(gh.begin(), gh.end());
  NodeStats total;
  for (const auto& [g, h] : gh) {
    total.g += g;
    total.h += h;
  }
  return total;
}

SplitChoice best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& grad,
                       const Eigen::VectorXd& hess, const std::vector<Eigen::Index>& rows,
                       const NodeStats& total, const std::vector<int>& features,
                       const GbdtParams& params) {
  SplitChoice best;
  const auto m = static_cast<std::int64_t>(rows.size());
  const int min_leaf = params.min_samples_leaf < 1 ? 1 : params.min_samples_leaf;
  if (m < 2 * min_leaf) return best;

  std::vector<std::tuple<double, double, double>> sorted;  // (value, g, h)
  for (const int f : features) {
    sorted.clear();
    sorted.reserve(rows.size());
    for (const auto r : rows) sorted.emplace_back(X(r, f), grad[r], hess[r]);
    std::sort(sorted.begin(), sorted.end());

    double g_left = 0.0, h_left = 0.0;
    std::int64_t n_left = 0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      g_left += std::get<1>(sorted[i]);
      h_left += std::get<2>(sorted[i]);
      ++n_left;
      if (std::get<0>(sorted[i]) == std::get<0>(sorted[i + 1])) continue;
      const std::int64_t n_right = m - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      const double gain = gbdt_split_gain(g_left, h_left, total.g - g_left, total.h - h_left,
                                          params.lambda_l2, params.gamma);
      // best.gain starts at 0, so only strictly positive gains are accepted;
      // ties keep the earlier candidate (lowest feature, lowest threshold).
      if (gain > best.gain) {
        best.found = true;
        best.feature = f;
        best.threshold = 0.5 * (std::get<0>(sorted[i]) + std::get<0>(sorted[i + 1]));
        best.gain = gain;
      }
    }
  }
  return best;
}

struct Partition {
  std::vector<Eigen::Index> left;
  std::vector<Eigen::Index> right;
};

Partition partition_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows,
                         int feature, double threshold) {
  Partition out;
  for (const auto r : rows) {
    (X(r, feature) <= threshold ? out.left : out.right).push_back(r);
  }
  return out;
}

TreeModel grow_depth_wise(const Eigen::MatrixXd& X, const Eigen::VectorXd& grad,
                          const Eigen::VectorXd& hess, std::vector<Eigen::Index> root_rows,
                          const std::vector<int>& features, const GbdtParams& params) {
  TreeModel tree;
  struct Item {
    int node;
    int depth;
    std::vector<Eigen::Index> rows;
    NodeStats total;
  };
  std::deque<Item> queue;
  tree.nodes.emplace_back();
  queue.push_back({0, 0, std::move(root_rows), {}});
  queue.back().total = canonical_totals(queue.back().rows, grad, hess);

  while (!queue.empty()) {
    Item item = std::move(queue.front());
    queue.pop_front();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(item.node)];
    node.n_samples = static_cast<std::int64_t>(item.rows.size());
    node.value = gbdt_leaf_value(item.total.g, item.total.h, params.lambda_l2);

    if (item.depth >= params.max_depth) continue;
    const SplitChoice split = best_split(X, grad, hess, item.rows, item.total, features, params);
    if (!split.found) continue;

    Partition parts = partition_rows(X, item.rows, split.feature, split.threshold);
    const int left_id = static_cast<int>(tree.nodes.size());
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_id;
    node.right = left_id + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    Item left{left_id, item.depth + 1, std::move(parts.left), {}};
    left.total = canonical_totals(left.rows, grad, hess);
    Item right{left_id + 1, item.depth + 1, std::move(parts.right), {}};
    right.total = canonical_totals(right.rows, grad, hess);
    queue.push_back(std::move(left));
    queue.push_back(std::move(right));
  }
  return tree;
}

TreeModel grow_leaf_wise(const Eigen::MatrixXd& X, const Eigen::VectorXd& grad,
                         const Eigen::VectorXd& hess, std::vector<Eigen::Index> root_rows,
                         const std::vector<int>& features, const GbdtParams& params) {
  TreeModel tree;
  struct Leaf {
    int node;
    std::vector<Eigen::Index> rows;
    NodeStats total;
    SplitChoice split;
  };
  std::vector<Leaf> leaves;

  const auto make_leaf = [&](int node_id, std::vector<Eigen::Index> rows) {
    Leaf leaf{node_id, std::move(rows), {}, {}};
    leaf.total = canonical_totals(leaf.rows, grad, hess);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.n_samples = static_cast<std::int64_t>(leaf.rows.size());
    node.value = gbdt_leaf_value(leaf.total.g, leaf.total.h, params.lambda_l2);
    leaf.split = best_split(X, grad, hess, leaf.rows, leaf.total, features, params);
    leaves.push_back(std::move(leaf));
  };

  tree.nodes.emplace_back();
  make_leaf(0, std::move(root_rows));

  int n_leaves = 1;
  while (n_leaves < params.max_leaves) {
    // Highest gain wins; ties go to the oldest node for determinism.
    int best_idx = -1;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].split.found) continue;
      if (best_idx < 0 || leaves[i].split.gain > leaves[static_cast<std::size_t>(best_idx)].split.gain)
        best_idx = static_cast<int>(i);
    }
    if (best_idx < 0) break;

    Leaf chosen = std::move(leaves[static_cast<std::size_t>(best_idx)]);
    leaves.erase(leaves.begin() + best_idx);
    Partition parts = partition_rows(X, chosen.rows, chosen.split.feature, chosen.split.threshold);
    const int left_id = static_cast<int>(tree.nodes.size());
    {
      TreeNode& node = tree.nodes[static_cast<std::size_t>(chosen.node)];
      node.feature = chosen.split.feature;
      node.threshold = chosen.split.threshold;
      node.left = left_id;
      node.right = left_id + 1;
    }
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    make_leaf(left_id, std::move(parts.left));
    make_leaf(left_id + 1, std::move(parts.right));
    ++n_leaves;
  }
  return tree;
}

}  // namespace

void GbdtClassifier::fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n == 0 || d == 0) fail(ErrorCode::EmptyInput, "fit needs data");
  if (y.size() != n) fail(ErrorCode::LengthMismatch, "X and y differ in length");
  const auto n_pos = static_cast<double>((y.array() == 1).count());
  if (n_pos == 0.0 || n_pos == static_cast<double>(n))
    fail(ErrorCode::SingleClass, "fit needs both classes");

  n_features_ = d;
  trees_.clear();
  train_logloss_.clear();

  const double prior = std::clamp(n_pos / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
  base_score_ = std::log(prior / (1.0 - prior));

  Eigen::VectorXd scores = Eigen::VectorXd::Constant(n, base_score_);
  train_logloss_.push_back(logloss(y, scores));

  Eigen::VectorXd grad(n), hess(n);
  for (int round = 0; round < params_.rounds; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      grad[i] = p - static_cast<double>(y[i]);
      hess[i] = p * (1.0 - p);
    }

    std::vector<Eigen::Index> rows;
    if (params_.row_subsample < 1.0) {
      const auto count = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(params_.row_subsample * static_cast<double>(n))));
      for (const auto i : rng.sample_without_replacement(static_cast<std::size_t>(n), count))
        rows.push_back(static_cast<Eigen::Index>(i));
    } else {
      rows.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    }

    std::vector<int> features;
    if (params_.feature_subsample < 1.0) {
      const auto count = std::clamp<std::size_t>(
          static_cast<std::size_t>(
              std::ceil(params_.feature_subsample * static_cast<double>(d) - 1e-9)),
          1, static_cast<std::size_t>(d));
      for (const auto f : rng.sample_without_replacement(static_cast<std::size_t>(d), count))
        features.push_back(static_cast<int>(f));
    } else {
      for (int f = 0; f < d; ++f) features.push_back(f);
    }

    TreeModel tree = params_.growth == GrowthPolicy::DepthWise
                         ? grow_depth_wise(X, grad, hess, std::move(rows), features, params_)
                         : grow_leaf_wise(X, grad, hess, std::move(rows), features, params_);
    for (Eigen::Index i = 0; i < n; ++i)
      scores[i] += params_.learning_rate * tree.predict_row(X.row(i));
    trees_.push_back(std::move(tree));
    train_logloss_.push_back(logloss(y, scores));
  }
  fitted_ = true;
}

Eigen::VectorXd GbdtClassifier::decision_function(const Eigen::MatrixXd& X) const {
  if (!fitted_) fail(ErrorCode::NotFitted, "GbdtClassifier::decision_function before fit");
  if (X.cols() != n_features_) fail(ErrorCode::DimensionMismatch, "feature count mismatch");
  Eigen::VectorXd scores = Eigen::VectorXd::Constant(X.rows(), base_score_);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.predict_row(X.row(i));
    scores[i] += params_.learning_rate * sum;
  }
  return scores;
}

Eigen::MatrixXd GbdtClassifier::predict_proba(const Eigen::MatrixXd& X) const {
  const Eigen::VectorXd scores = decision_function(X);
  Eigen::MatrixXd proba(X.rows(), 2);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double p1 = sigmoid(scores[i]);
    proba(i, 0) = 1.0 - p1;
    proba(i, 1) = p1;
  }
  return proba;
}

GbdtClassifier GbdtClassifier::restore(GbdtParams params, double base_score,
                                       Eigen::Index n_features, std::vector<TreeModel> trees) {
  GbdtClassifier model(params);
  model.base_score_ = base_score;
  model.trees_ = std::move(trees);
  model.n_features_ = n_features;
  model.fitted_ = true;
  return model;
}

}  // namespace stackliver
