#include "trustfg/noise_model.hpp"

#include <Eigen/Cholesky>

namespace trustfg {

NoiseModel::NoiseModel(const Eigen::MatrixXd& covariance) : covariance_(covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw NoiseModelError("covariance must be square and non-empty");
  }
  if (!covariance.allFinite()) {
    throw NoiseModelError("covariance has non-finite entries");
  }
  if (!covariance.isApprox(covariance.transpose(), 1e-9)) {
    throw NoiseModelError("covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw NoiseModelError("covariance is not positive-definite");
  }
  chol_lower_ = llt.matrixL();
}

NoiseModel NoiseModel::isotropic(int dim, double sigma) {
  if (dim <= 0 || sigma <= 0.0) {
    throw NoiseModelError("isotropic noise needs dim > 0 and sigma > 0");
  }
  return NoiseModel(Eigen::MatrixXd::Identity(dim, dim) * (sigma * sigma));
}

NoiseModel NoiseModel::diagonal_sigmas(const Eigen::VectorXd& sigmas) {
  if (sigmas.size() == 0 || (sigmas.array() <= 0.0).any()) {
    throw NoiseModelError("diagonal noise needs positive sigmas");
  }
  return NoiseModel(sigmas.array().square().matrix().asDiagonal());
}

Eigen::VectorXd NoiseModel::whiten(const Eigen::VectorXd& r) const {
  if (r.size() != dim()) {
    throw NoiseModelError("residual dimension does not match covariance");
  }
  return chol_lower_.triangularView<Eigen::Lower>().solve(r);
}

Eigen::MatrixXd NoiseModel::whiten_jacobian(const Eigen::MatrixXd& jac) const {
  if (jac.rows() != dim()) {
    throw NoiseModelError("jacobian row count does not match covariance");
  }
  return chol_lower_.triangularView<Eigen::Lower>().solve(jac);
}

double NoiseModel::half_squared_mahalanobis(const Eigen::VectorXd& r) const {
  return 0.5 * whiten(r).squaredNorm();
}

}  // namespace trustfg
