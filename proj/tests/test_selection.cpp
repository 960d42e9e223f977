#include <doctest.h>

#include <algorithm>
#include <set>

#include "stackliver/error.hpp"
#include "stackliver/selection.hpp"
#include "test_helpers.hpp"

using namespace stackliver;

namespace {

// 2 informative + 3 noise features.
std::pair<Eigen::MatrixXd, Eigen::VectorXi> informative_and_noise(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, 5);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    X(i, 0) = rng.normal() + (y[i] ? 2.5 : 0.0);
    X(i, 1) = rng.normal() + (y[i] ? 2.0 : 0.0);
    X(i, 2) = rng.normal();
    X(i, 3) = rng.normal();
    X(i, 4) = rng.normal();
  }
  return {X, y};
}

RfecvParams fast_params() {
  RfecvParams params;
  params.estimator.n_trees = 25;
  return params;
}

}  // namespace

TEST_CASE("rfecv keeps the informative features in F*") {
  auto [X, y] = informative_and_noise(240, 404);
  Rng rng(7);
  const RfecvTrace trace = rfecv(X, y, fast_params(), rng);

  REQUIRE(trace.iterations.size() == 4);  // sizes 5, 4, 3, 2
  CHECK(trace.iterations.front().features.size() == 5);
  CHECK(trace.iterations.back().features.size() == 2);
  CHECK(trace.accuracy_list.size() == 4);

  const std::set<int> best(trace.best_features.begin(), trace.best_features.end());
  CHECK(best.count(0) == 1);
  CHECK(best.count(1) == 1);

  // Recorded sizes from the default {3,5,7} request that exist here.
  CHECK(trace.size_accuracy.count(3) == 1);
  CHECK(trace.size_accuracy.count(5) == 1);
  CHECK(trace.size_accuracy.count(7) == 0);
}

TEST_CASE("rfecv nesting: each smaller set is contained in the previous one") {
  auto [X, y] = informative_and_noise(160, 11);
  Rng rng(3);
  const RfecvTrace trace = rfecv(X, y, fast_params(), rng);
  for (std::size_t i = 1; i < trace.iterations.size(); ++i) {
    const auto& larger = trace.iterations[i - 1].features;
    const auto& smaller = trace.iterations[i].features;
    CHECK(smaller.size() + 1 == larger.size());
    for (const int f : smaller)
      CHECK(std::find(larger.begin(), larger.end(), f) != larger.end());
  }
}

TEST_CASE("rfecv determinism: fixed seed, identical trace") {
  auto [X, y] = informative_and_noise(160, 12);
  Rng r1(9), r2(9);
  const RfecvTrace a = rfecv(X, y, fast_params(), r1);
  const RfecvTrace b = rfecv(X, y, fast_params(), r2);
  REQUIRE(a.iterations.size() == b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    CHECK(a.iterations[i].features == b.iterations[i].features);
    CHECK(a.iterations[i].mean_accuracy == b.iterations[i].mean_accuracy);
  }
  CHECK(a.best_features == b.best_features);
}

TEST_CASE("rfecv on d=2 records exactly one iteration") {
  auto [X5, y] = informative_and_noise(120, 13);
  const Eigen::MatrixXd X = X5.leftCols(2);
  Rng rng(1);
  const RfecvTrace trace = rfecv(X, y, fast_params(), rng);
  CHECK(trace.iterations.size() == 1);
  CHECK(trace.iterations[0].features.size() == 2);
}

TEST_CASE("rfecv rejects d < 2") {
  Eigen::MatrixXd X(10, 1);
  X.setRandom();
  Eigen::VectorXi y(10);
  for (int i = 0; i < 10; ++i) y[i] = i % 2;
  Rng rng(1);
  RfecvParams params = fast_params();
  CHECK_THROWS_AS(rfecv(X, y, params, rng), Error);
}

TEST_CASE("rfecv calibration on pure noise stays near the chance rate") {
  Rng data_rng(2023);
  const int n = 200;
  Eigen::MatrixXd X(n, 4);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    for (int j = 0; j < 4; ++j) X(i, j) = data_rng.normal();
  }
  Rng rng(5);
  const RfecvTrace trace = rfecv(X, y, fast_params(), rng);
  // Majority rate is 0.5; CV accuracy on noise stays within 3 sigma of it.
  const double sigma = 0.5 / std::sqrt(static_cast<double>(n));
  for (const double acc : trace.accuracy_list) {
    CHECK(acc > 0.5 - 3 * sigma);
    CHECK(acc < 0.5 + 3 * sigma);
  }
}

TEST_CASE("select_k looks up recorded sizes and rejects unrecorded ones") {
  auto [X, y] = informative_and_noise(160, 14);
  Rng rng(2);
  const RfecvTrace trace = rfecv(X, y, fast_params(), rng);
  const auto four = select_k(trace, 4);
  CHECK(four.size() == 4);
  CHECK_THROWS_AS(select_k(trace, 9), Error);
  CHECK_THROWS_AS(select_k(trace, 1), Error);
  // k equal to the best size returns F* itself.
  const auto best_size = static_cast<int>(trace.best_features.size());
  CHECK(select_k(trace, best_size) == trace.best_features);
}
