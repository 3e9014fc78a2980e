#pragma once

#include <Eigen/Core>

#include "trustfg/errors.hpp"

namespace trustfg {

/// Gaussian noise model Sigma = L L^T. Whitening multiplies by L^{-1} so that
/// ||whiten(r)||^2 = r^T Sigma^{-1} r.
class NoiseModel {
 public:
  explicit NoiseModel(const Eigen::MatrixXd& covariance);

  static NoiseModel isotropic(int dim, double sigma);
  static NoiseModel diagonal_sigmas(const Eigen::VectorXd& sigmas);

  int dim() const { return static_cast<int>(covariance_.rows()); }
  const Eigen::MatrixXd& covariance() const { return covariance_; }

  Eigen::VectorXd whiten(const Eigen::VectorXd& r) const;
  Eigen::MatrixXd whiten_jacobian(const Eigen::MatrixXd& jac) const;

  /// Mahalanobis cost 0.5 * r^T Sigma^{-1} r.
  double half_squared_mahalanobis(const Eigen::VectorXd& r) const;

 private:
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd chol_lower_;
};

}  // namespace trustfg
