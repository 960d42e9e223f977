#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stackliver/cart.hpp"
#include "stackliver/classifier.hpp"

namespace stackliver {

struct ForestParams {
  int n_trees = 100;
  int max_depth = -1;
  int min_samples_leaf = 1;
  int max_features = 0;  // 0: ceil(sqrt(d)); < 0: all
  bool bootstrap = true;
  int threads = 1;
};

// Bagged CARTs with per-split feature subsampling. predict_proba averages the
// per-tree leaf class frequencies; importances are the per-tree Gini
// importances averaged and normalized to sum 1.
class RandomForest : public Classifier {
 public:
  explicit RandomForest(ForestParams params = {}) : params_(params) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) override;
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;
  std::optional<Eigen::VectorXd> feature_importances() const override;

  const ForestParams& params() const { return params_; }
  const std::vector<TreeModel>& trees() const { return trees_; }
  bool fitted() const { return fitted_; }

 private:
  ForestParams params_;
  std::vector<TreeModel> trees_;
  Eigen::VectorXd importances_;
  Eigen::Index n_features_ = 0;
  bool fitted_ = false;
};

}  // namespace stackliver
