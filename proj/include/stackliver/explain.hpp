#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "stackliver/classifier.hpp"
#include "stackliver/rng.hpp"

namespace stackliver {

// Batched scalar model output (class-1 probability unless noted otherwise).
using ScoreFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

inline ScoreFn positive_probability_fn(const Classifier& model) {
  return [&model](const Eigen::MatrixXd& X) { return positive_proba(model, X); };
}

// Training-distribution statistics LIME samples from, all in the model's
// input space. display_mean/display_std, when non-empty, map thresholds back
// to original units for the condition text.
struct LimeStats {
  std::vector<std::string> feature_names;
  Eigen::VectorXd mean;
  Eigen::VectorXd std_dev;
  Eigen::MatrixXd quartiles;  // d x 3 (q1, median, q3); empty disables condition text
  Eigen::VectorXd display_mean;
  Eigen::VectorXd display_std;
};

struct LimeExplanation {
  int instance_id = 0;
  int predicted_class = 0;
  struct Item {
    std::string feature;
    double weight = 0.0;      // toward class-1 probability
    std::string condition;
  };
  std::vector<Item> items;
  double intercept = 0.0;
  double kernel_width = 0.0;
  int n_samples = 0;
  double fidelity = 0.0;  // weighted R^2 of the surrogate
  bool fidelity_defined = true;
};

// Local surrogate: Gaussian perturbations around the training distribution,
// exponential kernel exp(-D^2 / sigma^2) with sigma = 0.75 * sqrt(d) and D
// Euclidean in standardized space, then weighted ridge regression of the
// model's class-1 probability (penalty on slopes only).
LimeExplanation lime_explain(const ScoreFn& model, const Eigen::RowVectorXd& x,
                             const LimeStats& stats, int n_samples, Rng& rng,
                             double ridge_penalty = 1.0);

LimeExplanation lime_explain(const Classifier& model, const Eigen::RowVectorXd& x,
                             const LimeStats& stats, int n_samples, Rng& rng,
                             double ridge_penalty = 1.0);

struct ShapExplanation {
  Eigen::VectorXd phi;      // log-odds units
  double base_value = 0.0;  // mean model output over the background
  double fx = 0.0;          // model output at x
};

// Exact Shapley values by full coalition enumeration with background-
// conditioned marginals; model output is logit of the clamped class-1
// probability, so sum(phi) = fx - base_value up to float error.
ShapExplanation shapley_exact(const ScoreFn& model, const Eigen::RowVectorXd& x,
                              const Eigen::MatrixXd& background, int max_features = 12);

ShapExplanation shapley_exact(const Classifier& model, const Eigen::RowVectorXd& x,
                              const Eigen::MatrixXd& background, int max_features = 12);

struct ShapReport {
  Eigen::MatrixXd phi;          // one row per explained instance
  Eigen::VectorXd mean_abs;     // per feature
  std::vector<int> order;       // features sorted by descending mean_abs
  double base_value = 0.0;
  std::vector<Eigen::Index> rows_used;
};

ShapReport shap_global_ranking(const ScoreFn& model, const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& background, int max_rows, Rng& rng,
                               int max_features = 12);

struct MorrisFeature {
  double mu = 0.0;
  double mu_star = 0.0;
  double sigma = 0.0;
  double mu_star_conf = 0.0;  // 95% bootstrap CI half-width
};

struct MorrisResult {
  std::vector<MorrisFeature> features;
  int r = 0;
  int p = 0;
  double delta = 0.0;
  Eigen::MatrixXd effects;                    // r x d elementary effects
  std::vector<Eigen::MatrixXd> trajectories;  // normalized coordinates, (d+1) x d each
};

// Morris elementary effects on a p-level grid mapped into [lo, hi], r
// one-at-a-time trajectories with step delta = p / (2(p-1)).
MorrisResult morris_ee(const ScoreFn& model, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                       int r, int p, Rng& rng);

MorrisResult morris_ee(const Classifier& model, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, int r, int p, Rng& rng);

}  // namespace stackliver
