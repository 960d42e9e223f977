#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stackliver/classifier.hpp"
#include "stackliver/tree.hpp"

namespace stackliver {

enum class GrowthPolicy { DepthWise, LeafWise };

struct GbdtParams {
  int rounds = 150;
  double learning_rate = 0.1;
  GrowthPolicy growth = GrowthPolicy::DepthWise;
  int max_depth = 5;     // depth-wise limit
  int max_leaves = 31;   // leaf-wise limit
  double lambda_l2 = 1.0;
  double gamma = 0.0;
  double row_subsample = 1.0;
  double feature_subsample = 1.0;
  int min_samples_leaf = 1;
};

// Second-order gain of a candidate split, minus the split penalty gamma.
inline double gbdt_split_gain(double g_left, double h_left, double g_right, double h_right,
                              double lambda, double gamma) {
  const double g_total = g_left + g_right;
  const double h_total = h_left + h_right;
  return 0.5 * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda) -
                g_total * g_total / (h_total + lambda)) -
         gamma;
}

inline double gbdt_leaf_value(double g, double h, double lambda) { return -g / (h + lambda); }

// Gradient-boosted trees on logistic loss: per round g_i = p_i - y_i,
// h_i = p_i (1 - p_i); log-odds = base_score + learning_rate * sum of tree
// outputs. Depth-wise growth expands every node to max_depth; leaf-wise
// repeatedly splits the highest-gain leaf up to max_leaves.
class GbdtClassifier : public Classifier {
 public:
  explicit GbdtClassifier(GbdtParams params = {}) : params_(params) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) override;
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;

  // Log-odds before the logistic link.
  Eigen::VectorXd decision_function(const Eigen::MatrixXd& X) const;

  const GbdtParams& params() const { return params_; }
  double base_score() const { return base_score_; }
  Eigen::Index n_features() const { return n_features_; }
  const std::vector<TreeModel>& trees() const { return trees_; }
  // Training logloss trace; entry 0 is the base-score loss, one entry per round after.
  const std::vector<double>& train_logloss() const { return train_logloss_; }
  bool fitted() const { return fitted_; }

  static GbdtClassifier restore(GbdtParams params, double base_score, Eigen::Index n_features,
                                std::vector<TreeModel> trees);

 private:
  GbdtParams params_;
  double base_score_ = 0.0;
  std::vector<TreeModel> trees_;
  std::vector<double> train_logloss_;
  Eigen::Index n_features_ = 0;
  bool fitted_ = false;
};

}  // namespace stackliver
