#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stackliver/classifier.hpp"

namespace stackliver {

struct MlpParams {
  std::vector<int> hidden = {100, 50};
  double alpha = 1e-4;  // L2 penalty on weights
  int max_epochs = 300;
  int batch_size = 200;  // effective size is min(batch_size, n)
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double tol = 1e-4;   // minimum epoch-loss improvement
  int patience = 10;   // epochs without improvement before stopping
};

// ReLU feed-forward net with a 2-way softmax head, trained by minibatch Adam
// on cross-entropy + (alpha/2)* sum of squared weights. He-uniform init.
class MlpClassifier : public Classifier {
 public:
  explicit MlpClassifier(MlpParams params = {}) : params_(params) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) override;
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;

  // Initializes parameters without training (exposed for the gradient check).
  void initialize(Eigen::Index n_features, Rng& rng);

  struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };

  // Objective and its gradient at the current parameters:
  // mean cross-entropy over the batch plus the L2 term.
  double loss_and_gradients(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                            Gradients* grads) const;

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  const std::vector<double>& epoch_losses() const { return epoch_losses_; }
  const MlpParams& params() const { return params_; }
  bool fitted() const { return fitted_; }

  static MlpClassifier restore(MlpParams params, std::vector<Eigen::MatrixXd> weights,
                               std::vector<Eigen::VectorXd> biases);

 private:
  Eigen::MatrixXd forward(const Eigen::MatrixXd& X, std::vector<Eigen::MatrixXd>* zs,
                          std::vector<Eigen::MatrixXd>* activations) const;

  MlpParams params_;
  std::vector<Eigen::MatrixXd> weights_;  // layer l: (out_l x in_l)
  std::vector<Eigen::VectorXd> biases_;
  std::vector<double> epoch_losses_;
  bool fitted_ = false;
};

}  // namespace stackliver
