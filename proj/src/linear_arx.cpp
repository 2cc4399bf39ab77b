#include "solarcast/linear_arx.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "solarcast/errors.hpp"

namespace solarcast {

double LinearArxModel::predict(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != coefficients.size()) {
    throw ParameterError("linear model input width mismatch");
  }
  return intercept + Eigen::Map<const Eigen::VectorXd>(x.data(), coefficients.size()).dot(coefficients);
}

bool LinearArxModel::finite() const { return std::isfinite(intercept) && coefficients.allFinite(); }

std::size_t linear_arx_min_samples(std::size_t dim) { return std::max<std::size_t>(10, 2 * dim); }

LinearArxModel fit_linear_arx(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("ridge lambda must be >= 0");
  if (x.rows() != y.size()) throw ParameterError("design and target sizes differ");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < linear_arx_min_samples(d)) {
    throw ParameterError("linear model needs at least " + std::to_string(linear_arx_min_samples(d)) +
                         " samples, got " + std::to_string(n));
  }

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = xc.transpose() * yc;

  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  bool singular = llt.info() != Eigen::Success;
  if (!singular && d > 0) {
    // Positive but vanishing pivots still mean a rank-deficient design.
    const Eigen::VectorXd pivots = llt.matrixL().toDenseMatrix().diagonal();
    const double scale = std::max(gram.diagonal().maxCoeff(), 1e-300);
    singular = (pivots.array().square() / scale).minCoeff() < 1e-12;
  }
  if (singular) {
    throw SingularityError("normal equations are singular (collinear inputs); use a ridge lambda > 0");
  }

  LinearArxModel model;
  model.coefficients = llt.solve(rhs);
  model.intercept = y_mean - x_mean.dot(model.coefficients);
  if (!model.finite()) throw SingularityError("linear model produced non-finite coefficients");
  return model;
}

}  // namespace solarcast
