#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "trustfg/noise_model.hpp"
#include "trustfg/types.hpp"

namespace trustfg {

/// A residual term over one or more state blocks with a Gaussian noise model.
/// Immutable after construction; residual/jacobians are pure in the states.
class Factor {
 public:
  Factor(FactorKind kind, std::vector<VarKey> keys, NoiseModel noise)
      : kind_(kind), keys_(std::move(keys)), noise_(std::move(noise)) {}
  virtual ~Factor() = default;

  FactorKind kind() const { return kind_; }
  const std::vector<VarKey>& keys() const { return keys_; }
  const NoiseModel& noise() const { return noise_; }
  int residual_dim() const { return noise_.dim(); }

  /// Residual r evaluated at the connected states, in key order.
  virtual Eigen::VectorXd residual(const std::vector<StateVariable>& states) const = 0;

  /// One d r / d state block per key, each residual_dim x 4.
  virtual std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>& states) const = 0;

  /// 0.5 * ||r||^2_Sigma.
  double cost(const std::vector<StateVariable>& states) const {
    return noise_.half_squared_mahalanobis(residual(states));
  }

 private:
  FactorKind kind_;
  std::vector<VarKey> keys_;
  NoiseModel noise_;
};

using FactorPtr = std::shared_ptr<const Factor>;

/// Unary prior pulling one state toward a fixed mean.
class AnchorFactor final : public Factor {
 public:
  AnchorFactor(const VarKey& key, const StateVariable& mean, NoiseModel noise)
      : Factor(FactorKind::kAnchor, {key}, std::move(noise)), mean_(mean.to_vector()) {}

  Eigen::VectorXd residual(const std::vector<StateVariable>& states) const override {
    return states[0].to_vector() - mean_;
  }

  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>&) const override {
    return {Eigen::MatrixXd::Identity(4, 4)};
  }

 private:
  Vec4 mean_;
};

}  // namespace trustfg
