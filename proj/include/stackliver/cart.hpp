#pragma once

#include <Eigen/Dense>

#include "stackliver/rng.hpp"
#include "stackliver/tree.hpp"

namespace stackliver {

struct CartParams {
  int max_depth = -1;        // < 0: unlimited
  int min_samples_leaf = 1;
  int max_features = -1;     // < 0: all features; otherwise sampled per split
};

struct CartResult {
  TreeModel tree;
  Eigen::VectorXd importances;  // per-feature weighted Gini decrease, unnormalized
};

// Greedy Gini CART. A node splits only if the best weighted impurity decrease
// is strictly positive; ties break toward the lowest feature index, then the
// lowest threshold. rng is consumed only when max_features narrows the
// candidate set.
CartResult fit_cart(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const CartParams& params,
                    Rng& rng);

}  // namespace stackliver
