#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "stackliver/classifier.hpp"
#include "stackliver/gbdt.hpp"
#include "stackliver/knn.hpp"

namespace stackliver {

struct StackParams {
  GbdtParams base_gbdt{.rounds = 150,
                       .learning_rate = 0.1,
                       .growth = GrowthPolicy::DepthWise,
                       .max_depth = 5,
                       .row_subsample = 0.8,
                       .feature_subsample = 0.8};
  KnnParams base_knn{.k = 7};
  GbdtParams meta{.rounds = 100,
                  .learning_rate = 0.1,
                  .growth = GrowthPolicy::LeafWise,
                  .max_leaves = 31,
                  .row_subsample = 1.0,
                  .feature_subsample = 1.0};
  int k_folds = 5;
  int threads = 1;
};

// Out-of-fold class-1 probabilities of both bases, one row per training row,
// aligned with y. Fold assignments are taken as given so the meta features
// depend only on out-of-fold fits.
Eigen::MatrixXd stack_meta_features(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                    const std::vector<std::vector<Eigen::Index>>& folds,
                                    const StackParams& params, std::uint64_t seed);

// Two-tier stack: GBDT + KNN bases feed a leaf-wise GBDT meta-model trained
// on their out-of-fold predictions; bases are refit on the full training set
// for inference.
class StackClassifier : public Classifier {
 public:
  explicit StackClassifier(StackParams params = {})
      : params_(params), base_gbdt_(params.base_gbdt), base_knn_(params.base_knn), meta_(params.meta) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) override;
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;

  const StackParams& params() const { return params_; }
  const GbdtClassifier& base_gbdt() const { return base_gbdt_; }
  const KnnClassifier& base_knn() const { return base_knn_; }
  const GbdtClassifier& meta() const { return meta_; }
  bool fitted() const { return fitted_; }

  static StackClassifier restore(StackParams params, GbdtClassifier base_gbdt,
                                 KnnClassifier base_knn, GbdtClassifier meta);

 private:
  Eigen::MatrixXd meta_features(const Eigen::MatrixXd& X) const;

  StackParams params_;
  GbdtClassifier base_gbdt_;
  KnnClassifier base_knn_;
  GbdtClassifier meta_;
  bool fitted_ = false;
};

}  // namespace stackliver
