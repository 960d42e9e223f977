#include "stackliver/numerics.hpp"

#include <cmath>
#include <limits>

#include "stackliver/error.hpp"
#include "stackliver/tabular.hpp"

namespace stackliver {

double quantile(const Eigen::Ref<const Eigen::VectorXd>& sorted, double q) {
  const Eigen::Index n = sorted.size();
  if (n == 0) fail(ErrorCode::Empty, "quantile of empty array");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::QOutOfRange, "q must lie in [0,1]");
  const double h = q * static_cast<double>(n - 1);
  const Eigen::Index lo = static_cast<Eigen::Index>(std::floor(h));
  if (lo >= n - 1) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

// Continued fraction for I_x(a,b), modified Lentz. Assumes x < (a+1)/(a+b+2).
double beta_cont_frac(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0) || !std::isfinite(a) || !std::isfinite(b))
    fail(ErrorCode::DomainError, "reg_inc_beta requires a,b > 0 and x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cont_frac(a, b, x) / a;
  }
  return 1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b;
}

double f_sf(double f, int d1, int d2) {
  if (d1 < 1 || d2 < 1 || !(f >= 0.0)) fail(ErrorCode::DomainError, "f_sf requires f >= 0, d1,d2 >= 1");
  if (std::isinf(f)) return 0.0;
  const double x = d2 / (d2 + d1 * f);
  return reg_inc_beta(0.5 * d2, 0.5 * d1, x);
}

AnovaResult one_way_anova(const Eigen::Ref<const Eigen::VectorXd>& values,
                          const Eigen::Ref<const Eigen::VectorXi>& labels) {
  const Eigen::Index n = values.size();
  if (labels.size() != n) fail(ErrorCode::LengthMismatch, "values and labels differ in length");
  if (n < 3) fail(ErrorCode::TooFewValues, "one_way_anova needs n >= 3");

  double sum[2] = {0.0, 0.0};
  Eigen::Index count[2] = {0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = labels[i];
    if (c != 0 && c != 1) fail(ErrorCode::NonBinary, "labels must be 0 or 1");
    sum[c] += values[i];
    ++count[c];
  }
  if (count[0] == 0 || count[1] == 0) fail(ErrorCode::SingleClass, "both classes must be non-empty");

  const double grand_mean = (sum[0] + sum[1]) / static_cast<double>(n);
  const double mean0 = sum[0] / static_cast<double>(count[0]);
  const double mean1 = sum[1] / static_cast<double>(count[1]);

  double ssw = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = values[i] - (labels[i] == 0 ? mean0 : mean1);
    ssw += d * d;
  }
  const double ssb = count[0] * (mean0 - grand_mean) * (mean0 - grand_mean) +
                     count[1] * (mean1 - grand_mean) * (mean1 - grand_mean);

  AnovaResult result;
  result.df_between = 1;
  result.df_within = static_cast<int>(n - 2);
  if (ssw <= 0.0) {
    result.degenerate = true;
    if (ssb <= 0.0) {
      // All values identical: no signal at all.
      result.f_stat = 0.0;
      result.p_value = 1.0;
    } else {
      result.f_stat = std::numeric_limits<double>::infinity();
      result.p_value = 0.0;
    }
    return result;
  }
  result.f_stat = (ssb / result.df_between) / (ssw / result.df_within);
  result.p_value = f_sf(result.f_stat, result.df_between, result.df_within);
  return result;
}

SignificanceReport significance_filter(const Frame& frame, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::DomainError, "alpha must lie in (0,1)");
  SignificanceReport report;
  report.alpha = alpha;
  const Eigen::VectorXi y = frame.labels();
  for (const auto& column : frame.columns()) {
    if (column.kind != ColumnKind::Numeric) continue;
    if (column.any_missing()) fail(ErrorCode::HasMissing, "column '" + column.name + "' has missing cells");
    AnovaResult row = one_way_anova(column.values, y);
    row.feature = column.name;
    const bool keep = row.p_value < alpha;
    (keep ? report.kept : report.dropped).push_back(column.name);
    report.table.push_back(std::move(row));
  }
  return report;
}

}  // namespace stackliver
