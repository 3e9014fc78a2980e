#include "trustfg/gp_trajectory.hpp"

#include <cmath>

namespace trustfg {

std::pair<Eigen::Matrix4d, Eigen::Matrix4d> constant_velocity_transition(double dt,
                                                                         double qc) {
  if (dt <= 0.0) throw ParameterError("transition dt must be positive");
  if (qc <= 0.0) throw ParameterError("transition qc must be positive");

  Eigen::Matrix4d phi = Eigen::Matrix4d::Identity();
  phi(0, 2) = dt;
  phi(1, 3) = dt;

  const double q_pp = qc * dt * dt * dt / 3.0;
  const double q_pv = qc * dt * dt / 2.0;
  const double q_vv = qc * dt;
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  q(0, 0) = q_pp;
  q(1, 1) = q_pp;
  q(0, 2) = q_pv;
  q(2, 0) = q_pv;
  q(1, 3) = q_pv;
  q(3, 1) = q_pv;
  q(2, 2) = q_vv;
  q(3, 3) = q_vv;
  return {phi, q};
}

GpPriorFactor::GpPriorFactor(const VarKey& from, const VarKey& to, double dt, double qc)
    : Factor(FactorKind::kGpPrior, {from, to},
             NoiseModel(constant_velocity_transition(dt, qc).second)),
      phi_(constant_velocity_transition(dt, qc).first) {}

Eigen::VectorXd GpPriorFactor::residual(const std::vector<StateVariable>& states) const {
  return states[1].to_vector() - phi_ * states[0].to_vector();
}

std::vector<Eigen::MatrixXd> GpPriorFactor::jacobians(
    const std::vector<StateVariable>&) const {
  return {-phi_, Eigen::Matrix4d::Identity()};
}

std::vector<FactorPtr> make_gp_prior_factors(const Trajectory& traj,
                                             const GPPriorParams& params) {
  traj.validate();
  return make_gp_prior_factors(traj, params, traj.states.front(), traj.states.back());
}

std::vector<FactorPtr> make_gp_prior_factors(const Trajectory& traj,
                                             const GPPriorParams& params,
                                             const StateVariable& start_anchor,
                                             const StateVariable& goal_anchor) {
  traj.validate();
  params.validate();

  std::vector<FactorPtr> factors;
  factors.reserve(traj.steps() + 1);
  for (int k = 0; k + 1 < traj.steps(); ++k) {
    factors.push_back(
        std::make_shared<GpPriorFactor>(traj.key(k), traj.key(k + 1), traj.dt, params.qc));
  }

  Eigen::Vector4d anchor_sigmas;
  anchor_sigmas << params.anchor_pos_sigma, params.anchor_pos_sigma,
      params.anchor_vel_sigma, params.anchor_vel_sigma;
  const NoiseModel anchor_noise = NoiseModel::diagonal_sigmas(anchor_sigmas);
  factors.push_back(
      std::make_shared<AnchorFactor>(traj.key(0), start_anchor, anchor_noise));
  factors.push_back(std::make_shared<AnchorFactor>(traj.key(traj.steps() - 1),
                                                   goal_anchor, anchor_noise));
  return factors;
}

Trajectory trajectory_from(const Assignment& values, int agent_id, int steps,
                           double dt) {
  if (steps < 2) throw ParameterError("trajectory needs at least 2 states");
  Trajectory traj;
  traj.agent_id = agent_id;
  traj.dt = dt;
  traj.states.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    traj.states.push_back(values.at(VarKey{agent_id, k}));
  }
  return traj;
}

std::vector<Vec2> positions_of(const Trajectory& traj) {
  std::vector<Vec2> p;
  p.reserve(traj.states.size());
  for (const auto& s : traj.states) p.push_back(s.position);
  return p;
}

std::vector<Vec2> resample_polyline(const Trajectory& traj, double resolution) {
  if (resolution <= 0.0) throw ParameterError("resample resolution must be positive");
  traj.validate();

  std::vector<Vec2> out;
  out.push_back(traj.states.front().position);
  for (int k = 0; k + 1 < traj.steps(); ++k) {
    const Vec2 a = traj.states[k].position;
    const Vec2 b = traj.states[k + 1].position;
    const double len = (b - a).norm();
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / resolution)));
    for (int i = 1; i <= pieces; ++i) {
      out.push_back(a + (b - a) * (static_cast<double>(i) / pieces));
    }
  }
  return out;
}

}  // namespace trustfg
