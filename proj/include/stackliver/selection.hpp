#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "stackliver/forest.hpp"
#include "stackliver/rng.hpp"

namespace stackliver {

struct RfecvIteration {
  std::vector<int> features;  // current set, ascending original indices
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracies;
  int removed_feature = -1;  // dropped after scoring this set
};

struct RfecvTrace {
  std::vector<RfecvIteration> iterations;  // sizes d, d-1, ..., 2
  std::map<int, double> size_accuracy;     // mean CV accuracy at requested sizes
  std::vector<double> accuracy_list;       // one entry per iteration
  std::vector<int> best_features;          // max accuracy; ties toward the smaller set
};

struct RfecvParams {
  int k_folds = 5;
  std::vector<int> record_sizes = {3, 5, 7};
  ForestParams estimator;
  int threads = 1;
};

// Recursive feature elimination: score the current set with stratified k-fold
// CV under a random forest, then drop the feature with the smallest
// importance from a full-data forest fit (ties drop the higher feature
// index). One feature per iteration, down to a single survivor.
RfecvTrace rfecv(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const RfecvParams& params,
                 Rng& rng);

// The recorded feature set of the given size.
std::vector<int> select_k(const RfecvTrace& trace, int k);

}  // namespace stackliver
