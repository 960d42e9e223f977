#pragma once

#include <Eigen/Dense>

#include "stackliver/classifier.hpp"

namespace stackliver {

struct KnnParams {
  int k = 7;
};

// Inverse-distance-weighted k nearest neighbors, Euclidean metric, exhaustive
// scan. Zero-distance neighbors take all probability mass, uniformly among
// themselves.
class KnnClassifier : public Classifier {
 public:
  explicit KnnClassifier(KnnParams params = {}) : params_(params) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) override;
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;

  const KnnParams& params() const { return params_; }
  const Eigen::MatrixXd& train_X() const { return X_; }
  const Eigen::VectorXi& train_y() const { return y_; }
  bool fitted() const { return fitted_; }

  static KnnClassifier restore(KnnParams params, Eigen::MatrixXd X, Eigen::VectorXi y);

 private:
  KnnParams params_;
  Eigen::MatrixXd X_;
  Eigen::VectorXi y_;
  bool fitted_ = false;
};

}  // namespace stackliver
