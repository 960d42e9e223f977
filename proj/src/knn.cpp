#include "stackliver/knn.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stackliver/error.hpp"

namespace stackliver {

void KnnClassifier::fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng&) {
  if (X.rows() == 0) fail(ErrorCode::EmptyInput, "fit needs data");
  if (y.size() != X.rows()) fail(ErrorCode::LengthMismatch, "X and y differ in length");
  X_ = X;
  y_ = y;
  fitted_ = true;
}

Eigen::MatrixXd KnnClassifier::predict_proba(const Eigen::MatrixXd& X) const {
  if (!fitted_) fail(ErrorCode::NotFitted, "KnnClassifier::predict_proba before fit");
  if (X.cols() != X_.cols()) fail(ErrorCode::DimensionMismatch, "feature count mismatch");
  const auto n_train = X_.rows();
  const int k = params_.k;
  if (k < 1 || k > n_train) fail(ErrorCode::KTooLarge, "k must lie in [1, n_train]");

  Eigen::MatrixXd proba(X.rows(), 2);
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n_train));
  for (Eigen::Index q = 0; q < X.rows(); ++q) {
    for (Eigen::Index i = 0; i < n_train; ++i)
      dist[static_cast<std::size_t>(i)] = {(X_.row(i) - X.row(q)).norm(), i};
    // Distance ties at the k-th boundary break toward the lower train index.
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

    double score[2] = {0.0, 0.0};
    int zero_count[2] = {0, 0};
    bool any_zero = false;
    for (int j = 0; j < k; ++j) {
      const auto [d, idx] = dist[static_cast<std::size_t>(j)];
      const int cls = y_[idx];
      if (d == 0.0) {
        any_zero = true;
        ++zero_count[cls];
      } else {
        score[cls] += 1.0 / d;
      }
    }
    double p1;
    if (any_zero) {
      p1 = static_cast<double>(zero_count[1]) / static_cast<double>(zero_count[0] + zero_count[1]);
    } else {
      p1 = score[1] / (score[0] + score[1]);
    }
    proba(q, 0) = 1.0 - p1;
    proba(q, 1) = p1;
  }
  return proba;
}

KnnClassifier KnnClassifier::restore(KnnParams params, Eigen::MatrixXd X, Eigen::VectorXi y) {
  KnnClassifier model(params);
  model.X_ = std::move(X);
  model.y_ = std::move(y);
  model.fitted_ = true;
  return model;
}

}  // namespace stackliver
