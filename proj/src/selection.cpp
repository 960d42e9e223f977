#include "stackliver/selection.hpp"

#include <algorithm>

#include "stackliver/error.hpp"
#include "stackliver/evaluation.hpp"

namespace stackliver {

RfecvTrace rfecv(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const RfecvParams& params,
                 Rng& rng) {
  const Eigen::Index d = X.cols();
  if (d < 2) fail(ErrorCode::TooFewFeatures, "rfecv needs at least 2 features");

  RfecvTrace trace;
  std::vector<int> current(static_cast<std::size_t>(d));
  for (int f = 0; f < d; ++f) current[static_cast<std::size_t>(f)] = f;

  while (current.size() > 1) {
    Eigen::MatrixXd X_sub(X.rows(), static_cast<Eigen::Index>(current.size()));
    for (std::size_t j = 0; j < current.size(); ++j)
      X_sub.col(static_cast<Eigen::Index>(j)) = X.col(current[j]);

    const std::uint64_t cv_seed = rng.next_u64();
    const std::uint64_t imp_seed = rng.next_u64();

    // Folds run in parallel, so the per-fold forests stay serial.
    ForestParams cv_estimator = params.estimator;
    cv_estimator.threads = 1;
    const CvReport cv = cross_validate(
        [&cv_estimator]() { return std::make_unique<RandomForest>(cv_estimator); }, X_sub, y,
        params.k_folds, cv_seed, params.threads);

    RfecvIteration iteration;
    iteration.features = current;
    iteration.mean_accuracy = cv.mean_accuracy;
    iteration.fold_accuracies = cv.fold_accuracy;

    if (std::find(params.record_sizes.begin(), params.record_sizes.end(),
                  static_cast<int>(current.size())) != params.record_sizes.end())
      trace.size_accuracy[static_cast<int>(current.size())] = cv.mean_accuracy;

    ForestParams full_estimator = params.estimator;
    full_estimator.threads = params.threads;
    RandomForest forest(full_estimator);
    Rng imp_rng(imp_seed);
    forest.fit(X_sub, y, imp_rng);
    const Eigen::VectorXd importances = *forest.feature_importances();

    // Least important goes; ties drop the higher original feature index.
    std::size_t drop = 0;
    for (std::size_t j = 1; j < current.size(); ++j) {
      const double imp = importances[static_cast<Eigen::Index>(j)];
      const double best = importances[static_cast<Eigen::Index>(drop)];
      if (imp < best || (imp == best && current[j] > current[drop])) drop = j;
    }
    iteration.removed_feature = current[drop];
    trace.accuracy_list.push_back(cv.mean_accuracy);
    trace.iterations.push_back(std::move(iteration));
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
  }

  double best = -1.0;
  for (const auto& iteration : trace.iterations) {
    if (iteration.mean_accuracy >= best) {  // later iterations are smaller sets
      best = iteration.mean_accuracy;
      trace.best_features = iteration.features;
    }
  }
  return trace;
}

std::vector<int> select_k(const RfecvTrace& trace, int k) {
  for (const auto& iteration : trace.iterations)
    if (static_cast<int>(iteration.features.size()) == k) return iteration.features;
  fail(ErrorCode::SizeNotRecorded, "no iteration of size " + std::to_string(k));
}

}  // namespace stackliver
