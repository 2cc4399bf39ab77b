#pragma once

#include <span>

#include <Eigen/Dense>

namespace solarcast {

struct LinearArxModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;

  double predict(std::span<const double> x) const;
  bool finite() const;
};

// Ridge regression with an unpenalised intercept; lambda = 0 gives ordinary
// least squares. Rows of `x` are samples. Needs at least max(10, 2 * dim)
// rows (ParameterError otherwise). Solves the centred normal equations by
// Cholesky; a (numerically) singular system raises SingularityError.
LinearArxModel fit_linear_arx(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

std::size_t linear_arx_min_samples(std::size_t dim);

}  // namespace solarcast
