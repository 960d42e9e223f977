#include "stackliver/forest.hpp"

#include <cmath>

#include "stackliver/error.hpp"
#include "stackliver/parallel.hpp"

namespace stackliver {

void RandomForest::fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n == 0 || d == 0) fail(ErrorCode::EmptyInput, "fit needs data");
  if (y.size() != n) fail(ErrorCode::LengthMismatch, "X and y differ in length");

  n_features_ = d;
  CartParams tree_params;
  tree_params.max_depth = params_.max_depth;
  tree_params.min_samples_leaf = params_.min_samples_leaf;
  if (params_.max_features == 0) {
    tree_params.max_features = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
  } else if (params_.max_features < 0) {
    tree_params.max_features = -1;
  } else {
    tree_params.max_features = std::min<int>(params_.max_features, static_cast<int>(d));
  }

  // Per-tree seeds are drawn up front so trees are identical for any thread count.
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(params_.n_trees));
  for (auto& s : seeds) s = rng.next_u64();

  trees_.assign(static_cast<std::size_t>(params_.n_trees), TreeModel{});
  std::vector<Eigen::VectorXd> tree_importances(static_cast<std::size_t>(params_.n_trees));
  parallel_for(static_cast<std::size_t>(params_.n_trees), params_.threads, [&](std::size_t t) {
    Rng tree_rng(seeds[t]);
    Eigen::MatrixXd Xb;
    Eigen::VectorXi yb;
    const Eigen::MatrixXd* Xp = &X;
    const Eigen::VectorXi* yp = &y;
    if (params_.bootstrap) {
      Xb.resize(n, d);
      yb.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto pick = static_cast<Eigen::Index>(tree_rng.below(static_cast<std::uint64_t>(n)));
        Xb.row(i) = X.row(pick);
        yb[i] = y[pick];
      }
      Xp = &Xb;
      yp = &yb;
    }
    CartResult fitted = fit_cart(*Xp, *yp, tree_params, tree_rng);
    trees_[t] = std::move(fitted.tree);
    tree_importances[t] = std::move(fitted.importances);
  });

  importances_ = Eigen::VectorXd::Zero(d);
  for (const auto& imp : tree_importances) importances_ += imp;
  importances_ /= static_cast<double>(params_.n_trees);
  const double sum = importances_.sum();
  if (sum > 0.0) importances_ /= sum;
  fitted_ = true;
}

Eigen::MatrixXd RandomForest::predict_proba(const Eigen::MatrixXd& X) const {
  if (!fitted_) fail(ErrorCode::NotFitted, "RandomForest::predict_proba before fit");
  if (X.cols() != n_features_) fail(ErrorCode::DimensionMismatch, "feature count mismatch");
  Eigen::MatrixXd proba(X.rows(), 2);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double p1 = 0.0;
    for (const auto& tree : trees_) p1 += tree.predict_row(X.row(i));
    p1 /= static_cast<double>(trees_.size());
    proba(i, 0) = 1.0 - p1;
    proba(i, 1) = p1;
  }
  return proba;
}

std::optional<Eigen::VectorXd> RandomForest::feature_importances() const {
  if (!fitted_) return std::nullopt;
  return importances_;
}

}  // namespace stackliver
