#include "stackliver/stacking.hpp"

#include <algorithm>

#include "stackliver/error.hpp"
#include "stackliver/evaluation.hpp"
#include "stackliver/parallel.hpp"

namespace stackliver {

Eigen::MatrixXd stack_meta_features(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                    const std::vector<std::vector<Eigen::Index>>& folds,
                                    const StackParams& params, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd meta(n, 2);
  meta.setConstant(-1.0);

  // Per-fold seeds derive from `seed` alone, never from the data.
  Rng seeder(seed);
  std::vector<std::uint64_t> fold_seeds(folds.size());
  for (auto& s : fold_seeds) s = seeder.next_u64();

  parallel_for(folds.size(), params.threads, [&](std::size_t i) {
    if (folds[i].empty()) return;
    std::vector<Eigen::Index> train_rows;
    for (std::size_t j = 0; j < folds.size(); ++j)
      if (j != i) train_rows.insert(train_rows.end(), folds[j].begin(), folds[j].end());
    std::sort(train_rows.begin(), train_rows.end());

    Eigen::MatrixXd X_train(train_rows.size(), X.cols());
    Eigen::VectorXi y_train(train_rows.size());
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
      X_train.row(static_cast<Eigen::Index>(r)) = X.row(train_rows[r]);
      y_train[static_cast<Eigen::Index>(r)] = y[train_rows[r]];
    }
    Eigen::MatrixXd X_fold(folds[i].size(), X.cols());
    for (std::size_t r = 0; r < folds[i].size(); ++r)
      X_fold.row(static_cast<Eigen::Index>(r)) = X.row(folds[i][r]);

    Rng fold_rng(fold_seeds[i]);
    GbdtClassifier gbdt(params.base_gbdt);
    Rng gbdt_rng = fold_rng.split();
    gbdt.fit(X_train, y_train, gbdt_rng);
    KnnClassifier knn(params.base_knn);
    Rng knn_rng = fold_rng.split();
    knn.fit(X_train, y_train, knn_rng);

    const Eigen::VectorXd p_gbdt = positive_proba(gbdt, X_fold);
    const Eigen::VectorXd p_knn = positive_proba(knn, X_fold);
    for (std::size_t r = 0; r < folds[i].size(); ++r) {
      meta(folds[i][r], 0) = p_gbdt[static_cast<Eigen::Index>(r)];
      meta(folds[i][r], 1) = p_knn[static_cast<Eigen::Index>(r)];
    }
  });
  return meta;
}

void StackClassifier::fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) {
  const Eigen::Index n = X.rows();
  if (n == 0 || X.cols() == 0) fail(ErrorCode::EmptyInput, "fit needs data");
  if (y.size() != n) fail(ErrorCode::LengthMismatch, "X and y differ in length");
  if (params_.k_folds < 2) fail(ErrorCode::ConfigError, "k_folds must be >= 2");
  if (n < params_.k_folds) fail(ErrorCode::TooFewSamples, "fewer samples than folds");

  const std::uint64_t fold_seed = rng.next_u64();
  const std::uint64_t meta_feature_seed = rng.next_u64();
  const std::uint64_t meta_fit_seed = rng.next_u64();
  const std::uint64_t gbdt_refit_seed = rng.next_u64();
  const std::uint64_t knn_refit_seed = rng.next_u64();

  const auto folds = stratified_kfold_lenient(y, params_.k_folds, fold_seed);
  const Eigen::MatrixXd meta_X = stack_meta_features(X, y, folds, params_, meta_feature_seed);

  meta_ = GbdtClassifier(params_.meta);
  Rng meta_rng(meta_fit_seed);
  meta_.fit(meta_X, y, meta_rng);

  base_gbdt_ = GbdtClassifier(params_.base_gbdt);
  Rng gbdt_rng(gbdt_refit_seed);
  base_gbdt_.fit(X, y, gbdt_rng);
  base_knn_ = KnnClassifier(params_.base_knn);
  Rng knn_rng(knn_refit_seed);
  base_knn_.fit(X, y, knn_rng);
  fitted_ = true;
}

Eigen::MatrixXd StackClassifier::meta_features(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd meta(X.rows(), 2);
  meta.col(0) = positive_proba(base_gbdt_, X);
  meta.col(1) = positive_proba(base_knn_, X);
  return meta;
}

Eigen::MatrixXd StackClassifier::predict_proba(const Eigen::MatrixXd& X) const {
  if (!fitted_) fail(ErrorCode::NotFitted, "StackClassifier::predict_proba before fit");
  if (X.cols() != base_knn_.train_X().cols())
    fail(ErrorCode::DimensionMismatch, "feature count mismatch");
  if (X.rows() == 0) return Eigen::MatrixXd(0, 2);
  return meta_.predict_proba(meta_features(X));
}

StackClassifier StackClassifier::restore(StackParams params, GbdtClassifier base_gbdt,
                                         KnnClassifier base_knn, GbdtClassifier meta) {
  StackClassifier model(params);
  model.base_gbdt_ = std::move(base_gbdt);
  model.base_knn_ = std::move(base_knn);
  model.meta_ = std::move(meta);
  model.fitted_ = true;
  return model;
}

}  // namespace stackliver
