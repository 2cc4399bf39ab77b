#include <gtest/gtest.h>

#include "oracle.hpp"
#include "solarcast/errors.hpp"
#include "solarcast/linear_arx.hpp"
#include "solarcast/rng.hpp"

using namespace solarcast;

namespace {

Eigen::MatrixXd random_design(Rng& rng, int n, int d) {
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
  }
  return x;
}

}  // namespace

TEST(LinearArx, RecoversExactPlane) {
  Rng rng(3);
  const Eigen::MatrixXd x = random_design(rng, 50, 2);
  const Eigen::VectorXd y = (2.0 * x.col(0) - 3.0 * x.col(1)).array() + 5.0;
  const auto m = fit_linear_arx(x, y, 0.0);
  EXPECT_NEAR(m.coefficients[0], 2.0, 1e-8);
  EXPECT_NEAR(m.coefficients[1], -3.0, 1e-8);
  EXPECT_NEAR(m.intercept, 5.0, 1e-8);
  const double in[] = {1.0, 1.0};
  EXPECT_NEAR(m.predict(in), 4.0, 1e-8);
}

TEST(LinearArx, ConstantTarget) {
  Rng rng(4);
  const Eigen::MatrixXd x = random_design(rng, 30, 3);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(30, 7.5);
  const auto m = fit_linear_arx(x, y, 0.0);
  EXPECT_NEAR(m.intercept, 7.5, 1e-10);
  EXPECT_LT(m.coefficients.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LinearArx, DuplicateColumnsAreSingular) {
  Rng rng(5);
  Eigen::MatrixXd x = random_design(rng, 40, 3);
  x.col(2) = x.col(0);
  const Eigen::VectorXd y = x.col(0) + x.col(1);
  EXPECT_THROW(fit_linear_arx(x, y, 0.0), SingularityError);
  // Ridge makes the system solvable.
  EXPECT_NO_THROW(fit_linear_arx(x, y, 1e-3));
}

TEST(LinearArx, TooFewSamples) {
  Rng rng(6);
  EXPECT_EQ(linear_arx_min_samples(3), 10u);
  EXPECT_EQ(linear_arx_min_samples(8), 16u);
  const Eigen::MatrixXd x = random_design(rng, 15, 8);
  EXPECT_THROW(fit_linear_arx(x, Eigen::VectorXd::Zero(15), 0.0), ParameterError);
}

TEST(LinearArx, MatchesPseudoInverseOnRandomDesigns) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Eigen::MatrixXd x = random_design(rng, 20, 5);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y[i] = rng.normal(0.0, 3.0);
    const auto m = fit_linear_arx(x, y, 0.0);
    const Eigen::VectorXd ref = oracle::least_squares_pinv(x, y);
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(m.coefficients[j], ref[j], 1e-8) << "seed " << seed;
    EXPECT_NEAR(m.intercept, ref[5], 1e-8);
  }
}

TEST(LinearArx, RidgeShrinksTowardZero) {
  Rng rng(8);
  const Eigen::MatrixXd x = random_design(rng, 100, 2);
  const Eigen::VectorXd y = (2.0 * x.col(0) - 3.0 * x.col(1)).array() + 5.0;
  const auto small = fit_linear_arx(x, y, 1.0);
  const auto big = fit_linear_arx(x, y, 1000.0);
  EXPECT_LT(big.coefficients.norm(), small.coefficients.norm());
  EXPECT_NEAR(big.intercept, y.mean() - big.coefficients.dot(x.colwise().mean()), 1e-9);
}

TEST(LinearArx, NoisyRecoveryWithinStandardErrors) {
  int covered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    const Eigen::MatrixXd x = random_design(rng, 1000, 2);
    Eigen::VectorXd y = (2.0 * x.col(0) - 3.0 * x.col(1)).array() + 5.0;
    for (int i = 0; i < y.size(); ++i) y[i] += rng.normal();
    const auto m = fit_linear_arx(x, y, 0.0);
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = (xc.transpose() * xc).inverse();  // sigma = 1
    const bool ok = std::abs(m.coefficients[0] - 2.0) < 3.0 * std::sqrt(cov(0, 0)) &&
                    std::abs(m.coefficients[1] + 3.0) < 3.0 * std::sqrt(cov(1, 1));
    covered += ok;
  }
  EXPECT_GE(covered, 95);
}
