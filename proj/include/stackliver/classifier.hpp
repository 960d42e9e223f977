#pragma once

#include <Eigen/Dense>
#include <optional>

#include "stackliver/rng.hpp"

namespace stackliver {

// Common contract for every learner. fit must be deterministic given
// (X, y, seed); predict_proba returns an n x 2 matrix whose rows sum to 1.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual void fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) = 0;
  virtual Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const = 0;
  virtual std::optional<Eigen::VectorXd> feature_importances() const { return std::nullopt; }
};

inline Eigen::VectorXd positive_proba(const Classifier& model, const Eigen::MatrixXd& X) {
  return model.predict_proba(X).col(1);
}

// Hard labels at the 0.5 threshold: class 1 iff p1 > 0.5.
inline Eigen::VectorXi predict_labels(const Classifier& model, const Eigen::MatrixXd& X) {
  const Eigen::VectorXd p1 = positive_proba(model, X);
  Eigen::VectorXi labels(p1.size());
  for (Eigen::Index i = 0; i < p1.size(); ++i) labels[i] = p1[i] > 0.5 ? 1 : 0;
  return labels;
}

}  // namespace stackliver
