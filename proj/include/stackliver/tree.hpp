#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace stackliver {

// Binary decision tree shared by CART, random forest and GBDT. Internal nodes
// route x[feature] <= threshold to the left child; leaves carry a value
// (class-1 probability for CART/RF, additive score for GBDT). Thresholds are
// midpoints of adjacent observed feature values.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::int64_t n_samples = 0;

  bool is_leaf() const { return feature < 0; }
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  bool empty() const { return nodes.empty(); }

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int at = 0;
    for (;;) {
      const TreeNode& node = nodes[static_cast<std::size_t>(at)];
      if (node.is_leaf()) return node.value;
      at = x[node.feature] <= node.threshold ? node.left : node.right;
    }
  }

  int depth() const { return depth_from(0); }

  int depth_from(int at) const {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (node.is_leaf()) return 0;
    const int l = depth_from(node.left);
    const int r = depth_from(node.right);
    return 1 + (l > r ? l : r);
  }
};

}  // namespace stackliver
