#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace stackliver {

class Frame;

// Quantile by linear interpolation at fractional index h = q * (n - 1).
// `sorted` must be ascending and non-empty.
double quantile(const Eigen::Ref<const Eigen::VectorXd>& sorted, double q);

// Regularized incomplete beta I_x(a, b), modified Lentz continued fraction
// with the symmetry switch at x > (a + 1) / (a + b + 2). Absolute error
// below 1e-12 over the tested domain.
double reg_inc_beta(double a, double b, double x);

// Upper tail of the F(d1, d2) distribution:
// P(F > f) = I_{d2 / (d2 + d1 f)}(d2/2, d1/2).
double f_sf(double f, int d1, int d2);

struct AnovaResult {
  std::string feature;
  double f_stat = 0.0;
  double p_value = 1.0;
  int df_between = 0;
  int df_within = 0;
  bool degenerate = false;  // zero within-group variance; F reported as +inf
};

// One-way ANOVA of `values` grouped by binary `labels` (feature as response).
AnovaResult one_way_anova(const Eigen::Ref<const Eigen::VectorXd>& values,
                          const Eigen::Ref<const Eigen::VectorXi>& labels);

struct SignificanceReport {
  double alpha = 0.05;
  std::vector<AnovaResult> table;    // one entry per numeric predictor
  std::vector<std::string> kept;     // features with p < alpha
  std::vector<std::string> dropped;  // features with p >= alpha
};

// Runs one_way_anova for every numeric predictor against the label column and
// drops features with p >= alpha. Degenerate (zero-SSW) features are kept.
SignificanceReport significance_filter(const Frame& frame, double alpha = 0.05);

}  // namespace stackliver
