#include "stackliver/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stackliver/error.hpp"
#include "stackliver/parallel.hpp"
#include "stackliver/rng.hpp"

namespace stackliver {

ConfusionMatrix confusion(const Eigen::Ref<const Eigen::VectorXi>& y_true,
                          const Eigen::Ref<const Eigen::VectorXi>& y_pred) {
  if (y_true.size() != y_pred.size())
    fail(ErrorCode::LengthMismatch, "y_true and y_pred differ in length");
  ConfusionMatrix cm;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1))
      fail(ErrorCode::NonBinary, "labels must be 0 or 1");
    if (t == 1) {
      p == 1 ? ++cm.tp : ++cm.fn;
    } else {
      p == 1 ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

namespace {

double safe_rate(std::int64_t num, std::int64_t den, bool* degenerate) {
  if (den == 0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double precision, double recall, bool* degenerate) {
  if (precision + recall == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

MetricsReport basic_metrics(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  if (n == 0) fail(ErrorCode::EmptyMatrix, "empty confusion matrix");

  MetricsReport r;
  r.confusion = cm;
  r.accuracy = static_cast<double>(cm.tn + cm.tp) / static_cast<double>(n);

  r.positive.support = cm.tp + cm.fn;
  r.positive.precision = safe_rate(cm.tp, cm.tp + cm.fp, &r.positive.degenerate);
  r.positive.recall = safe_rate(cm.tp, cm.tp + cm.fn, &r.positive.degenerate);
  r.positive.f1 = f1_of(r.positive.precision, r.positive.recall, &r.positive.degenerate);

  r.negative.support = cm.tn + cm.fp;
  r.negative.precision = safe_rate(cm.tn, cm.tn + cm.fn, &r.negative.degenerate);
  r.negative.recall = safe_rate(cm.tn, cm.tn + cm.fp, &r.negative.degenerate);
  r.negative.f1 = f1_of(r.negative.precision, r.negative.recall, &r.negative.degenerate);

  r.macro_precision = 0.5 * (r.positive.precision + r.negative.precision);
  r.macro_recall = 0.5 * (r.positive.recall + r.negative.recall);
  r.macro_f1 = 0.5 * (r.positive.f1 + r.negative.f1);

  const double w_pos = static_cast<double>(r.positive.support) / static_cast<double>(n);
  const double w_neg = static_cast<double>(r.negative.support) / static_cast<double>(n);
  r.weighted_precision = w_pos * r.positive.precision + w_neg * r.negative.precision;
  r.weighted_recall = w_pos * r.positive.recall + w_neg * r.negative.recall;
  r.weighted_f1 = w_pos * r.positive.f1 + w_neg * r.negative.f1;

  r.kappa = cohen_kappa(cm, &r.kappa_degenerate);
  return r;
}

double cohen_kappa(const ConfusionMatrix& cm, bool* degenerate) {
  const std::int64_t n = cm.total();
  if (n == 0) fail(ErrorCode::EmptyMatrix, "empty confusion matrix");
  const double dn = static_cast<double>(n);
  const double p_o = static_cast<double>(cm.tn + cm.tp) / dn;
  const double true_pos = static_cast<double>(cm.tp + cm.fn);
  const double true_neg = static_cast<double>(cm.tn + cm.fp);
  const double pred_pos = static_cast<double>(cm.tp + cm.fp);
  const double pred_neg = static_cast<double>(cm.tn + cm.fn);
  const double p_e = (true_pos * pred_pos + true_neg * pred_neg) / (dn * dn);
  if (degenerate) *degenerate = false;
  if (p_e == 1.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return (p_o - p_e) / (1.0 - p_e);
}

double roc_auc(const Eigen::Ref<const Eigen::VectorXi>& y_true,
               const Eigen::Ref<const Eigen::VectorXd>& scores) {
  const Eigen::Index n = y_true.size();
  if (scores.size() != n) fail(ErrorCode::LengthMismatch, "y_true and scores differ in length");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(scores[i])) fail(ErrorCode::DomainError, "scores must be finite");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

  // Average ranks over tied scores; sum ranks of positives.
  double rank_sum_pos = 0.0;
  std::int64_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mean_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) {
      if (y_true[order[t]] == 1) {
        rank_sum_pos += mean_rank;
        ++n_pos;
      } else if (y_true[order[t]] == 0) {
        ++n_neg;
      } else {
        fail(ErrorCode::NonBinary, "labels must be 0 or 1");
      }
    }
    i = j + 1;
  }
  if (n_pos == 0 || n_neg == 0) fail(ErrorCode::SingleClass, "roc_auc needs both classes");
  return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_curve(const Eigen::Ref<const Eigen::VectorXi>& y_true,
                                const Eigen::Ref<const Eigen::VectorXd>& scores) {
  const Eigen::Index n = y_true.size();
  if (scores.size() != n) fail(ErrorCode::LengthMismatch, "y_true and scores differ in length");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });
  std::int64_t n_pos = (y_true.array() == 1).count();
  std::int64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorCode::SingleClass, "roc_curve needs both classes");

  std::vector<RocPoint> points;
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (y_true[order[i]] == 1) ? ++tp : ++fp;
      ++i;
    }
    points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(n_neg),
                      static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  return points;
}

std::vector<std::vector<Eigen::Index>> stratified_kfold_lenient(
    const Eigen::Ref<const Eigen::VectorXi>& y, int k, std::uint64_t seed) {
  if (k < 1) fail(ErrorCode::ConfigError, "k must be >= 1");
  std::vector<std::vector<Eigen::Index>> by_class(2);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) fail(ErrorCode::NonBinary, "labels must be 0 or 1");
    by_class[static_cast<std::size_t>(y[i])].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(k));
  for (auto& rows : by_class) {
    rng.shuffle(rows);
    for (std::size_t j = 0; j < rows.size(); ++j)
      folds[j % static_cast<std::size_t>(k)].push_back(rows[j]);
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

std::vector<std::vector<Eigen::Index>> stratified_kfold(
    const Eigen::Ref<const Eigen::VectorXi>& y, int k, std::uint64_t seed) {
  std::vector<std::size_t> counts(2, 0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 0 || y[i] == 1) ++counts[static_cast<std::size_t>(y[i])];
  }
  for (const auto count : counts) {
    if (count != 0 && count < static_cast<std::size_t>(k))
      fail(ErrorCode::ClassSmallerThanK, "a class has fewer members than k");
  }
  return stratified_kfold_lenient(y, k, seed);
}

MetricsReport evaluate_model(const Classifier& model, const Eigen::MatrixXd& X,
                             const Eigen::VectorXi& y) {
  const Eigen::MatrixXd proba = model.predict_proba(X);
  Eigen::VectorXi y_pred(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) y_pred[i] = proba(i, 1) > 0.5 ? 1 : 0;
  MetricsReport report = basic_metrics(confusion(y, y_pred));
  const bool both = (y.array() == 1).any() && (y.array() == 0).any();
  if (both) {
    report.auc = roc_auc(y, proba.col(1));
    report.has_auc = true;
  }
  return report;
}

CvReport cross_validate(const ClassifierFactory& factory, const Eigen::MatrixXd& X,
                        const Eigen::VectorXi& y, int k, std::uint64_t seed, int threads) {
  Rng rng(seed);
  const std::uint64_t fold_seed = rng.next_u64();
  const auto folds = stratified_kfold(y, k, fold_seed);
  std::vector<std::uint64_t> fit_seeds;
  for (int i = 0; i < k; ++i) fit_seeds.push_back(rng.next_u64());

  CvReport report;
  report.folds.resize(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t i) {
    std::vector<Eigen::Index> train_rows;
    for (std::size_t j = 0; j < folds.size(); ++j)
      if (j != i) train_rows.insert(train_rows.end(), folds[j].begin(), folds[j].end());
    std::sort(train_rows.begin(), train_rows.end());
    const auto& test_rows = folds[i];

    Eigen::MatrixXd X_train(train_rows.size(), X.cols());
    Eigen::VectorXi y_train(train_rows.size());
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
      X_train.row(static_cast<Eigen::Index>(r)) = X.row(train_rows[r]);
      y_train[static_cast<Eigen::Index>(r)] = y[train_rows[r]];
    }
    Eigen::MatrixXd X_test(test_rows.size(), X.cols());
    Eigen::VectorXi y_test(test_rows.size());
    for (std::size_t r = 0; r < test_rows.size(); ++r) {
      X_test.row(static_cast<Eigen::Index>(r)) = X.row(test_rows[r]);
      y_test[static_cast<Eigen::Index>(r)] = y[test_rows[r]];
    }

    auto model = factory();
    Rng fit_rng(fit_seeds[i]);
    model->fit(X_train, y_train, fit_rng);
    report.folds[i] = evaluate_model(*model, X_test, y_test);
  });

  for (const auto& fold : report.folds) {
    report.fold_accuracy.push_back(fold.accuracy);
    report.fold_auc.push_back(fold.auc);
  }
  const auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) {
      sd = 0.0;
      return;
    }
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  mean_std(report.fold_accuracy, report.mean_accuracy, report.std_accuracy);
  mean_std(report.fold_auc, report.mean_auc, report.std_auc);
  return report;
}

}  // namespace stackliver
