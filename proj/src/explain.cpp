#include "stackliver/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "stackliver/error.hpp"

namespace stackliver {

namespace {

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string bin_condition(const std::string& name, double x, double q1, double q2, double q3) {
  if (x <= q1) return name + " <= " + short_number(q1);
  if (x <= q2) return short_number(q1) + " < " + name + " <= " + short_number(q2);
  if (x <= q3) return short_number(q2) + " < " + name + " <= " + short_number(q3);
  return name + " > " + short_number(q3);
}

}  // namespace

LimeExplanation lime_explain(const ScoreFn& model, const Eigen::RowVectorXd& x,
                             const LimeStats& stats, int n_samples, Rng& rng,
                             double ridge_penalty) {
  const Eigen::Index d = x.size();
  if (stats.mean.size() != d || stats.std_dev.size() != d)
    fail(ErrorCode::DimensionMismatch, "LIME stats do not match the instance width");
  if (n_samples < 2) fail(ErrorCode::TooFewSamples, "lime_explain needs n_samples >= 2");

  const double kernel_width = 0.75 * std::sqrt(static_cast<double>(d));

  // Perturbations: each feature independently Normal(train mean, train std).
  Eigen::MatrixXd Z(n_samples, d);
  for (Eigen::Index s = 0; s < n_samples; ++s)
    for (Eigen::Index j = 0; j < d; ++j)
      Z(s, j) = stats.mean[j] + stats.std_dev[j] * rng.normal();

  Eigen::VectorXd weights(n_samples);
  for (Eigen::Index s = 0; s < n_samples; ++s) {
    double dist2 = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double scale = stats.std_dev[j] != 0.0 ? stats.std_dev[j] : 1.0;
      const double diff = (x[j] - Z(s, j)) / scale;
      dist2 += diff * diff;
    }
    weights[s] = std::exp(-dist2 / (kernel_width * kernel_width));
  }
  const double weight_sum = weights.sum();
  if (!(weight_sum > 0.0)) fail(ErrorCode::DegenerateKernel, "all kernel weights vanished");

  const Eigen::VectorXd target = model(Z);

  // Weighted ridge on [1, Z]; the intercept is unpenalized.
  Eigen::MatrixXd design(n_samples, d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = Z;
  Eigen::MatrixXd normal = design.transpose() * weights.asDiagonal() * design;
  for (Eigen::Index j = 1; j <= d; ++j) normal(j, j) += ridge_penalty;
  const Eigen::VectorXd beta = normal.ldlt().solve(design.transpose() * (weights.asDiagonal() * target));

  LimeExplanation out;
  out.kernel_width = kernel_width;
  out.n_samples = n_samples;
  out.intercept = beta[0];

  const Eigen::VectorXd fitted = design * beta;
  const double mean_w = weights.dot(target) / weight_sum;
  double ss_tot = 0.0, ss_res = 0.0;
  for (Eigen::Index s = 0; s < n_samples; ++s) {
    ss_tot += weights[s] * (target[s] - mean_w) * (target[s] - mean_w);
    ss_res += weights[s] * (target[s] - fitted[s]) * (target[s] - fitted[s]);
  }
  if (ss_tot > 1e-12) {
    out.fidelity = 1.0 - ss_res / ss_tot;
    out.fidelity_defined = true;
  } else {
    out.fidelity = 0.0;
    out.fidelity_defined = false;
  }

  const double px = model(x)(0);
  out.predicted_class = px > 0.5 ? 1 : 0;

  for (Eigen::Index j = 0; j < d; ++j) {
    LimeExplanation::Item item;
    item.feature = j < static_cast<Eigen::Index>(stats.feature_names.size())
                       ? stats.feature_names[static_cast<std::size_t>(j)]
                       : "f" + std::to_string(j);
    item.weight = beta[j + 1];
    if (stats.quartiles.rows() == d && stats.quartiles.cols() == 3) {
      const bool display = stats.display_mean.size() == d && stats.display_std.size() == d;
      const auto show = [&](double v) {
        return display ? v * stats.display_std[j] + stats.display_mean[j] : v;
      };
      item.condition = bin_condition(item.feature, show(x[j]), show(stats.quartiles(j, 0)),
                                     show(stats.quartiles(j, 1)), show(stats.quartiles(j, 2)));
    }
    out.items.push_back(std::move(item));
  }
  return out;
}

LimeExplanation lime_explain(const Classifier& model, const Eigen::RowVectorXd& x,
                             const LimeStats& stats, int n_samples, Rng& rng,
                             double ridge_penalty) {
  return lime_explain(positive_probability_fn(model), x, stats, n_samples, rng, ridge_penalty);
}

namespace {

double logit_clamped(double p) {
  const double c = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(c / (1.0 - c));
}

}  // namespace

ShapExplanation shapley_exact(const ScoreFn& model, const Eigen::RowVectorXd& x,
                              const Eigen::MatrixXd& background, int max_features) {
  const Eigen::Index d = x.size();
  if (d > max_features)
    fail(ErrorCode::TooManyFeatures, "exact Shapley enumerates 2^d coalitions; d too large");
  if (background.rows() == 0 || background.cols() != d)
    fail(ErrorCode::EmptyInput, "background must be non-empty with matching width");

  const std::size_t n_coalitions = std::size_t{1} << d;
  const Eigen::Index n_bg = background.rows();

  // v(S) = mean over background rows of f(x_S combined with b_outside).
  std::vector<double> value(n_coalitions);
  Eigen::MatrixXd mixed(n_bg, d);
  for (std::size_t mask = 0; mask < n_coalitions; ++mask) {
    mixed = background;
    for (Eigen::Index j = 0; j < d; ++j)
      if (mask & (std::size_t{1} << j)) mixed.col(j).setConstant(x[j]);
    const Eigen::VectorXd p = model(mixed);
    double sum = 0.0;
    for (Eigen::Index b = 0; b < n_bg; ++b) sum += logit_clamped(p[b]);
    value[mask] = sum / static_cast<double>(n_bg);
  }

  std::vector<double> factorial(static_cast<std::size_t>(d) + 1, 1.0);
  for (std::size_t i = 1; i < factorial.size(); ++i)
    factorial[i] = factorial[i - 1] * static_cast<double>(i);
  std::vector<double> coalition_weight(static_cast<std::size_t>(d));  // by |S|
  for (std::size_t s = 0; s < coalition_weight.size(); ++s)
    coalition_weight[s] = factorial[s] * factorial[static_cast<std::size_t>(d) - s - 1] /
                          factorial[static_cast<std::size_t>(d)];

  ShapExplanation out;
  out.phi = Eigen::VectorXd::Zero(d);
  for (std::size_t mask = 0; mask < n_coalitions; ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (Eigen::Index j = 0; j < d; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      if (mask & bit) continue;
      out.phi[j] += coalition_weight[size] * (value[mask | bit] - value[mask]);
    }
  }
  out.base_value = value[0];
  out.fx = value[n_coalitions - 1];
  return out;
}

ShapExplanation shapley_exact(const Classifier& model, const Eigen::RowVectorXd& x,
                              const Eigen::MatrixXd& background, int max_features) {
  return shapley_exact(positive_probability_fn(model), x, background, max_features);
}

ShapReport shap_global_ranking(const ScoreFn& model, const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& background, int max_rows, Rng& rng,
                               int max_features) {
  if (X.rows() == 0) fail(ErrorCode::EmptyInput, "no rows to explain");
  ShapReport report;
  if (max_rows > 0 && X.rows() > max_rows) {
    for (const auto i : rng.sample_without_replacement(static_cast<std::size_t>(X.rows()),
                                                       static_cast<std::size_t>(max_rows)))
      report.rows_used.push_back(static_cast<Eigen::Index>(i));
  } else {
    for (Eigen::Index i = 0; i < X.rows(); ++i) report.rows_used.push_back(i);
  }

  report.phi.resize(static_cast<Eigen::Index>(report.rows_used.size()), X.cols());
  for (std::size_t r = 0; r < report.rows_used.size(); ++r) {
    const ShapExplanation one = shapley_exact(model, X.row(report.rows_used[r]), background, max_features);
    report.phi.row(static_cast<Eigen::Index>(r)) = one.phi.transpose();
    report.base_value = one.base_value;
  }
  report.mean_abs = report.phi.cwiseAbs().colwise().mean();

  report.order.resize(static_cast<std::size_t>(X.cols()));
  std::iota(report.order.begin(), report.order.end(), 0);
  std::sort(report.order.begin(), report.order.end(), [&](int a, int b) {
    if (report.mean_abs[a] != report.mean_abs[b]) return report.mean_abs[a] > report.mean_abs[b];
    return a < b;
  });
  return report;
}

MorrisResult morris_ee(const ScoreFn& model, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                       int r, int p, Rng& rng) {
  const Eigen::Index d = lo.size();
  if (hi.size() != d || d == 0) fail(ErrorCode::DimensionMismatch, "bounds width mismatch");
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]) || hi[j] < lo[j])
      fail(ErrorCode::UnboundedFeature, "feature bounds must be finite with hi >= lo");
  }
  if (r < 1 || p < 2) fail(ErrorCode::ConfigError, "morris_ee needs r >= 1, p >= 2");

  MorrisResult result;
  result.r = r;
  result.p = p;
  result.delta = static_cast<double>(p) / (2.0 * (p - 1));
  result.effects.resize(r, d);

  // Base levels i/(p-1) that keep x + delta on the grid.
  std::vector<double> base_levels;
  for (int i = 0; i < p; ++i) {
    const double level = static_cast<double>(i) / (p - 1);
    if (level <= 1.0 - result.delta + 1e-12) base_levels.push_back(level);
  }

  const Eigen::VectorXd range = hi - lo;
  std::vector<int> perm(static_cast<std::size_t>(d));
  for (int t = 0; t < r; ++t) {
    Eigen::MatrixXd traj(d + 1, d);  // normalized coordinates
    for (Eigen::Index j = 0; j < d; ++j)
      traj(0, j) = base_levels[static_cast<std::size_t>(rng.below(base_levels.size()))];
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (Eigen::Index step = 0; step < d; ++step) {
      traj.row(step + 1) = traj.row(step);
      traj(step + 1, perm[static_cast<std::size_t>(step)]) += result.delta;
    }

    Eigen::MatrixXd points(d + 1, d);
    for (Eigen::Index row = 0; row < d + 1; ++row)
      points.row(row) = lo.transpose().array() + traj.row(row).array() * range.transpose().array();
    const Eigen::VectorXd values = model(points);
    for (Eigen::Index step = 0; step < d; ++step) {
      const int feature = perm[static_cast<std::size_t>(step)];
      result.effects(t, feature) = (values[step + 1] - values[step]) / result.delta;
    }
    result.trajectories.push_back(std::move(traj));
  }

  Rng boot_rng = rng.split();
  constexpr int kBootstrap = 1000;
  result.features.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd ee = result.effects.col(j);
    MorrisFeature& f = result.features[static_cast<std::size_t>(j)];
    f.mu = ee.mean();
    f.mu_star = ee.cwiseAbs().mean();
    f.sigma = r > 1 ? std::sqrt((ee.array() - f.mu).square().sum() / static_cast<double>(r - 1)) : 0.0;

    // 95% CI half-width of mu_star from bootstrap resamples of the effects.
    double sum = 0.0, sum_sq = 0.0;
    for (int b = 0; b < kBootstrap; ++b) {
      double abs_sum = 0.0;
      for (int s = 0; s < r; ++s)
        abs_sum += std::fabs(ee[static_cast<Eigen::Index>(boot_rng.below(static_cast<std::uint64_t>(r)))]);
      const double mu_star_b = abs_sum / static_cast<double>(r);
      sum += mu_star_b;
      sum_sq += mu_star_b * mu_star_b;
    }
    const double mean_b = sum / kBootstrap;
    const double var_b = std::max(0.0, (sum_sq - kBootstrap * mean_b * mean_b) / (kBootstrap - 1));
    f.mu_star_conf = 1.96 * std::sqrt(var_b);
  }
  return result;
}

MorrisResult morris_ee(const Classifier& model, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, int r, int p, Rng& rng) {
  return morris_ee(positive_probability_fn(model), lo, hi, r, p, rng);
}

}  // namespace stackliver
