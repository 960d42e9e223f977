#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "stackliver/classifier.hpp"

namespace stackliver {

struct ConfusionMatrix {
  std::int64_t tn = 0, fp = 0, fn = 0, tp = 0;
  std::int64_t total() const { return tn + fp + fn + tp; }
};

// Positive class = label 1.
ConfusionMatrix confusion(const Eigen::Ref<const Eigen::VectorXi>& y_true,
                          const Eigen::Ref<const Eigen::VectorXi>& y_pred);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
  bool degenerate = false;  // a 0/0 rate was defined as 0
};

struct MetricsReport {
  double accuracy = 0.0;
  ClassMetrics positive;  // label 1
  ClassMetrics negative;  // label 0
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
  double kappa = 0.0;
  bool kappa_degenerate = false;
  double auc = 0.0;
  bool has_auc = false;
  ConfusionMatrix confusion;
  double train_seconds = 0.0;
  double inference_seconds = 0.0;
};

// Everything derivable from the confusion matrix alone (no AUC).
MetricsReport basic_metrics(const ConfusionMatrix& cm);

double cohen_kappa(const ConfusionMatrix& cm, bool* degenerate = nullptr);

// Rank-based (Mann-Whitney) AUC; ties count 0.5.
double roc_auc(const Eigen::Ref<const Eigen::VectorXi>& y_true,
               const Eigen::Ref<const Eigen::VectorXd>& scores);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// ROC polyline over score-descending thresholds, starting at (0,0).
std::vector<RocPoint> roc_curve(const Eigen::Ref<const Eigen::VectorXi>& y_true,
                                const Eigen::Ref<const Eigen::VectorXd>& scores);

// Per-class seeded shuffle, then round-robin assignment: fold class counts
// differ by at most 1 within each class.
std::vector<std::vector<Eigen::Index>> stratified_kfold(
    const Eigen::Ref<const Eigen::VectorXi>& y, int k, std::uint64_t seed);

// Same fold builder without the >= k per-class requirement; folds may come
// out empty (leave-one-out style schemes).
std::vector<std::vector<Eigen::Index>> stratified_kfold_lenient(
    const Eigen::Ref<const Eigen::VectorXi>& y, int k, std::uint64_t seed);

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

struct CvReport {
  std::vector<MetricsReport> folds;
  std::vector<double> fold_accuracy;
  std::vector<double> fold_auc;
  double mean_accuracy = 0.0, std_accuracy = 0.0;  // sample std, divisor k-1
  double mean_auc = 0.0, std_auc = 0.0;
};

CvReport cross_validate(const ClassifierFactory& factory, const Eigen::MatrixXd& X,
                        const Eigen::VectorXi& y, int k = 5, std::uint64_t seed = 42,
                        int threads = 1);

// Wall time around a call, monotonic clock.
template <typename F>
auto timed(F&& fn) -> std::pair<decltype(fn()), double> {
  const auto start = std::chrono::steady_clock::now();
  auto result = fn();
  const auto stop = std::chrono::steady_clock::now();
  return {std::move(result), std::chrono::duration<double>(stop - start).count()};
}

template <typename F>
double timed_void(F&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

// Full report for one fitted model on one dataset.
MetricsReport evaluate_model(const Classifier& model, const Eigen::MatrixXd& X,
                             const Eigen::VectorXi& y);

}  // namespace stackliver
