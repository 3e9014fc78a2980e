#pragma once

#include <map>
#include <utility>
#include <vector>

#include "trustfg/factor.hpp"
#include "trustfg/gp_trajectory.hpp"
#include "trustfg/types.hpp"

namespace trustfg {

// Parameters shared by the inter-agent factors. Distances are metres.
struct TrustParams {
  double eps_proximity = 0.1;     // clearance threshold between agent surfaces
  double sigma_proximity = 0.01;  // noise sigma of the proximity hinge residual
  double sigma_consistency = 1.0; // noise sigma of the acceleration-difference residual
  double consistency_range = 1.0; // length scale of the exp(-d/range) weight kernel
  double transparency_beta = 2.5; // threshold inflation gain per unit discrepancy
  double transparency_tol = 0.05; // positional tolerance when scoring shared trajectories

  void validate() const;  // throws ParameterError unless every field is positive
};

// Unordered agent pair, normalized so first < second.
using AgentPair = std::pair<int, int>;
AgentPair make_agent_pair(int a, int b);

// Outcome of the transparency preprocessing step: how much each agent's shared
// trajectory disagreed with observation, and the clearance threshold each pair
// ends up with after inflation.
struct TransparencyReport {
  std::map<int, double> discrepancy;          // agent id -> fraction in [0,1]
  std::map<AgentPair, double> inflated_eps;   // pair -> epsilon', >= base epsilon
};

// max(eps - d, 0) where d is a surface-to-surface distance.
double proximity_hinge(double distance, double eps);

// Finite-difference acceleration between two consecutive states.
Vec2 acceleration(const StateVariable& from, const StateVariable& to, double dt);

// epsilon' = eps * (1 + beta * max(delta_a, delta_b)).
double inflate_epsilon(double eps, double delta_a, double delta_b, double beta);

// Fraction of time indices where the shared trajectory's position deviates
// from the observed one by more than tol.
double compute_discrepancy(const Trajectory& shared,
                           const std::vector<Vec2>& observed_positions,
                           double tol);

// Penalizes two agents whose surfaces come within eps of each other at the
// same time index. One residual row; costs vanish identically beyond eps.
class ProximityFactor final : public Factor {
 public:
  ProximityFactor(VarKey a, VarKey b, double radius_a, double radius_b,
                  double eps, double sigma);

  Eigen::VectorXd residual(const std::vector<StateVariable>& states) const override;
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>& states) const override;

  double eps() const { return eps_; }

 private:
  double radius_a_;
  double radius_b_;
  double eps_;
};

// Same hinge, but the second agent is a fixed point rather than a variable.
// Used when each agent optimizes alone against broadcast neighbor plans.
class FixedProximityFactor final : public Factor {
 public:
  FixedProximityFactor(VarKey self, double radius_self, Vec2 neighbor_position,
                       double neighbor_radius, double eps, double sigma);

  Eigen::VectorXd residual(const std::vector<StateVariable>& states) const override;
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>& states) const override;

 private:
  double radius_self_;
  Vec2 neighbor_position_;
  double neighbor_radius_;
  double eps_;
};

// Penalizes differing accelerations of two nearby agents over one step:
// r = w * (accel_a - accel_b), w = exp(-d/range) frozen when the factor is
// built from the current iterate, so each linearization sees a smooth
// residual in the four connected velocities.
class ConsistencyFactor final : public Factor {
 public:
  ConsistencyFactor(VarKey a0, VarKey a1, VarKey b0, VarKey b1, double dt,
                    double weight, double sigma);

  Eigen::VectorXd residual(const std::vector<StateVariable>& states) const override;
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>& states) const override;

  double weight() const { return weight_; }

 private:
  double dt_;
  double weight_;
};

// Consistency against an immutable neighbor acceleration (decentralized mode).
class FixedConsistencyFactor final : public Factor {
 public:
  FixedConsistencyFactor(VarKey self0, VarKey self1, double dt,
                         Vec2 neighbor_accel, double weight, double sigma);

  Eigen::VectorXd residual(const std::vector<StateVariable>& states) const override;
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>& states) const override;

 private:
  double dt_;
  Vec2 neighbor_accel_;
  double weight_;
};

// One proximity factor per unordered pair per time index. Pairs present in
// inflated_eps use the inflated threshold, others the base eps_proximity.
// Radii are looked up per agent id and must all be present and positive.
std::vector<FactorPtr> make_proximity_factors(
    const std::vector<Trajectory>& trajs,
    const std::map<int, double>& radii,
    const TrustParams& params,
    const std::map<AgentPair, double>& inflated_eps = {});

// One consistency factor per unordered pair per step interval. Weights come
// from pair distances in weight_source, evaluated at the interval start.
std::vector<FactorPtr> make_consistency_factors(
    const std::vector<Trajectory>& trajs,
    const Assignment& weight_source,
    const TrustParams& params);

// Fixed-neighbor variants: factors touch only `self` variables while the
// neighbor trajectory acts as constants.
std::vector<FactorPtr> make_fixed_proximity_factors(
    const Trajectory& self, double radius_self,
    const Trajectory& neighbor, double radius_neighbor,
    double eps, double sigma);

std::vector<FactorPtr> make_fixed_consistency_factors(
    const Trajectory& self, const Trajectory& neighbor,
    const TrustParams& params);

}  // namespace trustfg
