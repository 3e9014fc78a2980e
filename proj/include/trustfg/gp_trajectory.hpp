#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "trustfg/factor.hpp"
#include "trustfg/types.hpp"

namespace trustfg {

/// One agent's trajectory: N support states spaced dt seconds apart.
struct Trajectory {
  int agent_id = 0;
  double dt = 0.1;
  std::vector<StateVariable> states;

  int steps() const { return static_cast<int>(states.size()); }
  double duration() const { return dt * (steps() - 1); }
  VarKey key(int k) const { return VarKey{agent_id, k}; }

  void validate() const {
    if (states.size() < 2) throw ParameterError("trajectory needs at least 2 states");
    if (dt <= 0.0) throw ParameterError("trajectory dt must be positive");
  }
};

struct GPPriorParams {
  /// White-noise-on-acceleration power spectral density [m^2/s^3].
  double qc = 1.0;
  double anchor_pos_sigma = 1e-4;
  double anchor_vel_sigma = 1e-2;

  void validate() const {
    if (qc <= 0.0 || anchor_pos_sigma <= 0.0 || anchor_vel_sigma <= 0.0) {
      throw ParameterError("GP prior parameters must be positive");
    }
  }
};

/// Constant-velocity transition Phi and process-noise covariance Q over dt,
/// for the state layout (x, y, vx, vy). Q has per-axis blocks
/// qc * [[dt^3/3, dt^2/2], [dt^2/2, dt]] coupling position and velocity.
std::pair<Eigen::Matrix4d, Eigen::Matrix4d> constant_velocity_transition(double dt,
                                                                         double qc);

/// Binary smoothness factor: r_k = theta_{k+1} - Phi theta_k, noise Q.
class GpPriorFactor final : public Factor {
 public:
  GpPriorFactor(const VarKey& from, const VarKey& to, double dt, double qc);

  Eigen::VectorXd residual(const std::vector<StateVariable>& states) const override;
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>& states) const override;

  const Eigen::Matrix4d& transition() const { return phi_; }

 private:
  Eigen::Matrix4d phi_;
};

/// N-1 GP factors plus start/goal anchor factors for one trajectory. The
/// anchor means are the trajectory's own first and last states.
std::vector<FactorPtr> make_gp_prior_factors(const Trajectory& traj,
                                             const GPPriorParams& params);

/// Same, but with explicitly supplied anchor means (the trajectory is only
/// the key/layout source, e.g. an initial guess that need not end on target).
std::vector<FactorPtr> make_gp_prior_factors(const Trajectory& traj,
                                             const GPPriorParams& params,
                                             const StateVariable& start_anchor,
                                             const StateVariable& goal_anchor);

/// Rebuild one agent's trajectory from assignment entries (agent_id, 0..steps-1).
Trajectory trajectory_from(const Assignment& values, int agent_id, int steps,
                           double dt);

/// Piecewise-linear resampling of the position polyline at spacing <=
/// resolution. Endpoints are preserved.
std::vector<Vec2> resample_polyline(const Trajectory& traj, double resolution);

std::vector<Vec2> positions_of(const Trajectory& traj);

}  // namespace trustfg
