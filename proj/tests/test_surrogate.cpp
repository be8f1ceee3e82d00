#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "hoope/rng.hpp"
#include "hoope/surrogate.hpp"

using namespace hoope;

namespace {

// Textbook GP prediction by dense direct solve, replicating the model's
// target standardization so it checks the full public contract.
struct DenseOracle {
  double mean;
  double variance;
};

DenseOracle dense_predict(const Vector& inputs, const Vector& targets,
                          double s2, double ell, double jitter, double theta) {
  const int n = static_cast<int>(inputs.size());
  const double tmean = targets.mean();
  const double tvar =
      (targets.array() - tmean).square().sum() / std::max(1, n - 1);
  const double tstd = tvar > 0.0 ? std::sqrt(tvar) : 1.0;
  const Vector y = (targets.array() - tmean) / tstd;

  Matrix k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      k(i, j) = GPModel::matern52(std::abs(inputs[i] - inputs[j]), s2, ell);
  k.diagonal().array() += jitter;

  Vector kstar(n);
  for (int i = 0; i < n; ++i)
    kstar[i] = GPModel::matern52(std::abs(theta - inputs[i]), s2, ell);

  const Matrix kinv = k.inverse();
  const double mean_std = kstar.dot(kinv * y);
  const double var_std = s2 - kstar.dot(kinv * kstar);
  return {tmean + tstd * mean_std, tstd * tstd * var_std};
}

Vector make_inputs(int n, double lo, double hi) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
  return x;
}

}  // namespace

TEST_CASE("matern-5/2 kernel basics") {
  CHECK(GPModel::matern52(0.0, 2.5, 1.3) == 2.5);
  // Monotone decay in r.
  double prev = GPModel::matern52(0.0, 1.0, 2.0);
  for (double r : {0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double v = GPModel::matern52(r, 1.0, 2.0);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
}

TEST_CASE("fit rejects degenerate input") {
  Vector x(3);
  x << 1.0, 1.0, 1.0;
  Matrix y = Matrix::Zero(3, 1);
  CHECK_THROWS_AS(GPModel::fit(x, y, SurrogateMode::IndexVector),
                  std::invalid_argument);

  Vector x2(2);
  x2 << 0.0, 1.0;
  Matrix y2 = Matrix::Zero(2, 1);
  CHECK_THROWS_AS(GPModel::fit(x2, y2, SurrogateMode::IndexVector),
                  std::invalid_argument);
}

TEST_CASE("three-point fit matches the dense direct-solve oracle") {
  Vector x(3);
  x << 0.0, 1.0, 2.5;
  Matrix y(3, 1);
  y << 0.3, -0.8, 1.1;
  const double s2 = 1.7, ell = 0.9, jitter = 1e-8;

  const GPModel model =
      GPModel::fit_fixed(x, y, SurrogateMode::IndexVector, s2, ell, jitter);
  for (double theta : {-0.5, 0.2, 0.9, 1.7, 2.2, 3.5}) {
    const GPPrediction pred = model.predict(theta);
    const DenseOracle oracle = dense_predict(x, y.col(0), s2, ell, jitter, theta);
    CHECK(pred.mean[0] == doctest::Approx(oracle.mean).epsilon(1e-10));
    CHECK(pred.variance[0] ==
          doctest::Approx(std::max(0.0, oracle.variance)).epsilon(1e-10));
  }
}

TEST_CASE("mid-range prediction matches the oracle on a larger fit") {
  RngStream rng(41);
  const int n = 25;
  const Vector x = make_inputs(n, 0.0, 30.0);
  Matrix y(n, 2);
  for (int i = 0; i < n; ++i) {
    y(i, 0) = std::tanh(0.3 * (x[i] - 12.0)) + 0.01 * rng.normal();
    y(i, 1) = std::cos(0.4 * x[i]) + 0.01 * rng.normal();
  }
  const double s2 = 0.8, ell = 4.0, jitter = 1e-6;
  const GPModel model =
      GPModel::fit_fixed(x, y, SurrogateMode::IndexVector, s2, ell, jitter);
  for (double theta : {3.7, 11.2, 19.9, 26.4}) {
    const GPPrediction pred = model.predict(theta);
    for (int c = 0; c < 2; ++c) {
      const DenseOracle oracle =
          dense_predict(x, y.col(c), s2, ell, jitter, theta);
      CHECK(pred.mean[c] == doctest::Approx(oracle.mean).epsilon(1e-10));
      CHECK(pred.variance[c] ==
            doctest::Approx(std::max(0.0, oracle.variance)).epsilon(1e-8));
    }
  }
}

TEST_CASE("grid-searched fit interpolates the training data") {
  // 100 samples of a smooth curve over [0, 30], the offline-calibration
  // geometry.
  const int n = 100;
  const Vector x = make_inputs(n, 0.0, 30.0);
  Matrix y(n, 1);
  for (int i = 0; i < n; ++i) y(i, 0) = std::sin(0.25 * x[i]) + 0.5;

  const GPModel model = GPModel::fit(x, y, SurrogateMode::IndexVector);
  REQUIRE(model.n_train() == 100);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const GPPrediction pred = model.predict(x[i]);
    worst = std::max(worst, std::abs(pred.mean[0] - y(i, 0)));
  }
  CHECK(worst < 1e-3);

  SUBCASE("tiny pinned jitter gives near-exact interpolation") {
    const GPModel tight = GPModel::fit_fixed(
        x, y, SurrogateMode::IndexVector, 1.0, 5.0, 1e-10);
    for (int i = 0; i < n; i += 7) {
      const GPPrediction pred = tight.predict(x[i]);
      CHECK(pred.mean[0] == doctest::Approx(y(i, 0)).epsilon(1e-6));
    }
  }
}

TEST_CASE("far-field prediction reverts to the prior") {
  const int n = 20;
  const Vector x = make_inputs(n, 0.0, 10.0);
  Matrix y(n, 1);
  for (int i = 0; i < n; ++i) y(i, 0) = 2.0 + std::sin(x[i]);
  const double s2 = 1.3, ell = 1.5, jitter = 1e-9;
  const GPModel model =
      GPModel::fit_fixed(x, y, SurrogateMode::IndexVector, s2, ell, jitter);

  // 10 length scales past the data: kernel weight is ~0.
  const GPPrediction pred = model.predict(10.0 + 10.0 * ell);
  const double prior_mean = model.target_mean(0);
  const double prior_var = s2 * model.target_std(0) * model.target_std(0);
  CHECK(pred.mean[0] == doctest::Approx(prior_mean).epsilon(1e-6));
  CHECK(pred.variance[0] == doctest::Approx(prior_var).epsilon(1e-6));
}

TEST_CASE("predictive variance is bounded and continuous") {
  RngStream rng(4242);
  const int n = 30;
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = 30.0 * rng.uniform01();
  Matrix y(n, 1);
  for (int i = 0; i < n; ++i) y(i, 0) = std::sin(0.5 * x[i]) + 0.05 * rng.normal();

  const GPModel model = GPModel::fit(x, y, SurrogateMode::IndexVector);
  const double bound =
      (model.signal_variance(0) + model.jitter(0)) * model.target_std(0) *
      model.target_std(0);

  double prev_mean = model.predict(-2.0).mean[0];
  for (double theta = -2.0 + 0.01; theta <= 32.0; theta += 0.01) {
    const GPPrediction pred = model.predict(theta);
    CHECK(pred.variance[0] >= 0.0);
    CHECK(pred.variance[0] <= bound * (1.0 + 1e-12));
    // Continuity: steps of 0.01 move the mean by a bounded amount.
    CHECK(std::abs(pred.mean[0] - prev_mean) < 0.5);
    prev_mean = pred.mean[0];
  }

  // Pointwise continuity at a finer scale.
  const double base = model.predict(14.0).mean[0];
  const double nudged = model.predict(14.0 + 1e-6).mean[0];
  CHECK(std::abs(nudged - base) < 1e-4);
}

TEST_CASE("squared-misfit mode reproduces observed misfits at training inputs") {
  const int n = 40;
  const Vector x = make_inputs(n, 0.0, 30.0);
  Matrix y(n, 1);
  for (int i = 0; i < n; ++i) {
    const double resid = std::sin(0.25 * x[i]) - 0.4;
    y(i, 0) = resid * resid;
  }
  const GPModel model = GPModel::fit(x, y, SurrogateMode::SquaredMisfit);
  CHECK(model.mode() == SurrogateMode::SquaredMisfit);

  const double tol =
      3.0 * std::sqrt(model.jitter(0)) * model.target_std(0) + 1e-8;
  for (int i = 0; i < n; ++i) {
    const GPPrediction pred = model.predict(x[i]);
    CHECK(std::abs(pred.mean[0] - y(i, 0)) < tol);
  }
}

TEST_CASE("save/load round-trip reproduces predictions") {
  const int n = 50;
  const Vector x = make_inputs(n, 0.0, 30.0);
  Matrix y(n, 3);
  for (int i = 0; i < n; ++i) {
    y(i, 0) = std::sin(0.2 * x[i]);
    y(i, 1) = std::cos(0.3 * x[i]);
    y(i, 2) = 0.1 * x[i];
  }
  const GPModel model = GPModel::fit(x, y, SurrogateMode::IndexVector);

  const std::string path =
      (std::filesystem::temp_directory_path() / "hoope_test_gp.txt").string();
  model.save(path);
  const GPModel back = GPModel::load(path);
  std::filesystem::remove(path);

  CHECK(back.mode() == model.mode());
  REQUIRE(back.n_outputs() == 3);
  for (double theta : {1.1, 7.7, 15.0, 29.2}) {
    const GPPrediction a = model.predict(theta);
    const GPPrediction b = back.predict(theta);
    for (int c = 0; c < 3; ++c) {
      CHECK(b.mean[c] == doctest::Approx(a.mean[c]).epsilon(1e-12));
      CHECK(b.variance[c] == doctest::Approx(a.variance[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-finite prediction input is rejected") {
  const Vector x = make_inputs(5, 0.0, 4.0);
  Matrix y(5, 1);
  y << 0.0, 1.0, 0.0, -1.0, 0.0;
  const GPModel model =
      GPModel::fit_fixed(x, y, SurrogateMode::IndexVector, 1.0, 1.0, 1e-8);
  CHECK_THROWS_AS(model.predict(std::nan("")), std::invalid_argument);
}
