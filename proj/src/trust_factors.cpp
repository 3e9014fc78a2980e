#include "trustfg/trust_factors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "trustfg/errors.hpp"
#include "trustfg/noise_model.hpp"

namespace trustfg {
namespace {

constexpr double kDegenerateDistance = 1e-12;

void check_aligned(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw AlignmentError("no trajectories given");
  std::set<int> ids;
  for (const auto& t : trajs) {
    t.validate();
    if (!ids.insert(t.agent_id).second) {
      throw AlignmentError("duplicate agent id " + std::to_string(t.agent_id));
    }
    if (t.states.size() != trajs.front().states.size()) {
      throw AlignmentError("trajectories disagree on step count");
    }
    if (std::abs(t.dt - trajs.front().dt) > 1e-12) {
      throw AlignmentError("trajectories disagree on dt");
    }
  }
}

double radius_of(const std::map<int, double>& radii, int agent_id) {
  auto it = radii.find(agent_id);
  if (it == radii.end()) {
    throw ParameterError("no radius for agent " + std::to_string(agent_id));
  }
  if (!(it->second > 0.0) || !std::isfinite(it->second)) {
    throw ParameterError("radius for agent " + std::to_string(agent_id) +
                         " must be positive");
  }
  return it->second;
}

// Sorted pointers so factor order is a function of agent ids, not caller order.
std::vector<const Trajectory*> by_agent_id(const std::vector<Trajectory>& trajs) {
  std::vector<const Trajectory*> out;
  out.reserve(trajs.size());
  for (const auto& t : trajs) out.push_back(&t);
  std::sort(out.begin(), out.end(), [](const Trajectory* a, const Trajectory* b) {
    return a->agent_id < b->agent_id;
  });
  return out;
}

}  // namespace

void TrustParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ParameterError(std::string(name) + " must be positive");
    }
  };
  positive(eps_proximity, "eps_proximity");
  positive(sigma_proximity, "sigma_proximity");
  positive(sigma_consistency, "sigma_consistency");
  positive(consistency_range, "consistency_range");
  positive(transparency_beta, "transparency_beta");
  positive(transparency_tol, "transparency_tol");
}

AgentPair make_agent_pair(int a, int b) {
  if (a == b) throw ParameterError("agent pair needs two distinct agents");
  return a < b ? AgentPair{a, b} : AgentPair{b, a};
}

double proximity_hinge(double distance, double eps) {
  if (!(eps > 0.0)) throw ParameterError("proximity eps must be positive");
  return distance <= eps ? eps - distance : 0.0;
}

Vec2 acceleration(const StateVariable& from, const StateVariable& to, double dt) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  return (to.velocity - from.velocity) / dt;
}

double inflate_epsilon(double eps, double delta_a, double delta_b, double beta) {
  if (!(eps > 0.0)) throw ParameterError("eps must be positive");
  if (delta_a < 0.0 || delta_a > 1.0 || delta_b < 0.0 || delta_b > 1.0) {
    throw ParameterError("discrepancy must lie in [0,1]");
  }
  if (beta < 0.0) throw ParameterError("beta must be non-negative");
  return eps * (1.0 + beta * std::max(delta_a, delta_b));
}

double compute_discrepancy(const Trajectory& shared,
                           const std::vector<Vec2>& observed_positions,
                           double tol) {
  shared.validate();
  if (!(tol > 0.0)) throw ParameterError("discrepancy tol must be positive");
  if (observed_positions.size() != shared.states.size()) {
    throw AlignmentError("observed positions and shared trajectory differ in length");
  }
  int over = 0;
  for (size_t k = 0; k < shared.states.size(); ++k) {
    if ((shared.states[k].position - observed_positions[k]).norm() > tol) ++over;
  }
  return static_cast<double>(over) / static_cast<double>(shared.states.size());
}

ProximityFactor::ProximityFactor(VarKey a, VarKey b, double radius_a,
                                 double radius_b, double eps, double sigma)
    : Factor(FactorKind::kProximity, {a, b}, NoiseModel::isotropic(1, sigma)),
      radius_a_(radius_a),
      radius_b_(radius_b),
      eps_(eps) {
  if (!(eps > 0.0)) throw ParameterError("proximity eps must be positive");
  if (!(radius_a > 0.0) || !(radius_b > 0.0)) {
    throw ParameterError("agent radii must be positive");
  }
}

Eigen::VectorXd ProximityFactor::residual(const std::vector<StateVariable>& states) const {
  const double center = (states[0].position - states[1].position).norm();
  const double surface = center - radius_a_ - radius_b_;
  Eigen::VectorXd r(1);
  r(0) = proximity_hinge(surface, eps_);
  return r;
}

std::vector<Eigen::MatrixXd> ProximityFactor::jacobians(
    const std::vector<StateVariable>& states) const {
  std::vector<Eigen::MatrixXd> out(2, Eigen::MatrixXd::Zero(1, StateVariable::kDim));
  const Vec2 diff = states[0].position - states[1].position;
  const double center = diff.norm();
  const double surface = center - radius_a_ - radius_b_;
  // Inactive beyond the threshold; at the kink itself take the flat branch.
  if (surface < eps_ && center > kDegenerateDistance) {
    const Vec2 u = diff / center;  // d(center)/d(pa) = u^T, d/d(pb) = -u^T
    out[0](0, 0) = -u.x();
    out[0](0, 1) = -u.y();
    out[1](0, 0) = u.x();
    out[1](0, 1) = u.y();
  }
  return out;
}

FixedProximityFactor::FixedProximityFactor(VarKey self, double radius_self,
                                           Vec2 neighbor_position,
                                           double neighbor_radius, double eps,
                                           double sigma)
    : Factor(FactorKind::kProximity, {self}, NoiseModel::isotropic(1, sigma)),
      radius_self_(radius_self),
      neighbor_position_(neighbor_position),
      neighbor_radius_(neighbor_radius),
      eps_(eps) {
  if (!(eps > 0.0)) throw ParameterError("proximity eps must be positive");
  if (!(radius_self > 0.0) || !(neighbor_radius > 0.0)) {
    throw ParameterError("agent radii must be positive");
  }
}

Eigen::VectorXd FixedProximityFactor::residual(const std::vector<StateVariable>& states) const {
  const double center = (states[0].position - neighbor_position_).norm();
  const double surface = center - radius_self_ - neighbor_radius_;
  Eigen::VectorXd r(1);
  r(0) = proximity_hinge(surface, eps_);
  return r;
}

std::vector<Eigen::MatrixXd> FixedProximityFactor::jacobians(
    const std::vector<StateVariable>& states) const {
  std::vector<Eigen::MatrixXd> out(1, Eigen::MatrixXd::Zero(1, StateVariable::kDim));
  const Vec2 diff = states[0].position - neighbor_position_;
  const double center = diff.norm();
  const double surface = center - radius_self_ - neighbor_radius_;
  if (surface < eps_ && center > kDegenerateDistance) {
    const Vec2 u = diff / center;
    out[0](0, 0) = -u.x();
    out[0](0, 1) = -u.y();
  }
  return out;
}

ConsistencyFactor::ConsistencyFactor(VarKey a0, VarKey a1, VarKey b0, VarKey b1,
                                     double dt, double weight, double sigma)
    : Factor(FactorKind::kConsistency, {a0, a1, b0, b1},
             NoiseModel::isotropic(2, sigma)),
      dt_(dt),
      weight_(weight) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw ParameterError("consistency weight must be finite and non-negative");
  }
}

Eigen::VectorXd ConsistencyFactor::residual(const std::vector<StateVariable>& states) const {
  const Vec2 accel_a = (states[1].velocity - states[0].velocity) / dt_;
  const Vec2 accel_b = (states[3].velocity - states[2].velocity) / dt_;
  return weight_ * (accel_a - accel_b);
}

std::vector<Eigen::MatrixXd> ConsistencyFactor::jacobians(
    const std::vector<StateVariable>& states) const {
  (void)states;  // linear in the velocities; positions do not enter
  std::vector<Eigen::MatrixXd> out(4, Eigen::MatrixXd::Zero(2, StateVariable::kDim));
  const double g = weight_ / dt_;
  out[0].block<2, 2>(0, 2) = -g * Eigen::Matrix2d::Identity();
  out[1].block<2, 2>(0, 2) = g * Eigen::Matrix2d::Identity();
  out[2].block<2, 2>(0, 2) = g * Eigen::Matrix2d::Identity();
  out[3].block<2, 2>(0, 2) = -g * Eigen::Matrix2d::Identity();
  return out;
}

FixedConsistencyFactor::FixedConsistencyFactor(VarKey self0, VarKey self1,
                                               double dt, Vec2 neighbor_accel,
                                               double weight, double sigma)
    : Factor(FactorKind::kConsistency, {self0, self1},
             NoiseModel::isotropic(2, sigma)),
      dt_(dt),
      neighbor_accel_(neighbor_accel),
      weight_(weight) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw ParameterError("consistency weight must be finite and non-negative");
  }
}

Eigen::VectorXd FixedConsistencyFactor::residual(const std::vector<StateVariable>& states) const {
  const Vec2 accel = (states[1].velocity - states[0].velocity) / dt_;
  return weight_ * (accel - neighbor_accel_);
}

std::vector<Eigen::MatrixXd> FixedConsistencyFactor::jacobians(
    const std::vector<StateVariable>& states) const {
  (void)states;
  std::vector<Eigen::MatrixXd> out(2, Eigen::MatrixXd::Zero(2, StateVariable::kDim));
  const double g = weight_ / dt_;
  out[0].block<2, 2>(0, 2) = -g * Eigen::Matrix2d::Identity();
  out[1].block<2, 2>(0, 2) = g * Eigen::Matrix2d::Identity();
  return out;
}

std::vector<FactorPtr> make_proximity_factors(
    const std::vector<Trajectory>& trajs,
    const std::map<int, double>& radii,
    const TrustParams& params,
    const std::map<AgentPair, double>& inflated_eps) {
  check_aligned(trajs);
  params.validate();
  const auto ordered = by_agent_id(trajs);
  const size_t steps = ordered.front()->states.size();

  std::vector<FactorPtr> factors;
  for (size_t i = 0; i < ordered.size(); ++i) {
    for (size_t j = i + 1; j < ordered.size(); ++j) {
      const Trajectory& a = *ordered[i];
      const Trajectory& b = *ordered[j];
      const double ra = radius_of(radii, a.agent_id);
      const double rb = radius_of(radii, b.agent_id);
      const auto pair = make_agent_pair(a.agent_id, b.agent_id);
      auto it = inflated_eps.find(pair);
      const double eps = it == inflated_eps.end() ? params.eps_proximity : it->second;
      if (eps < params.eps_proximity - 1e-12) {
        throw ParameterError("inflated eps below base threshold");
      }
      for (size_t k = 0; k < steps; ++k) {
        factors.push_back(std::make_shared<ProximityFactor>(
            a.key(k), b.key(k), ra, rb, eps, params.sigma_proximity));
      }
    }
  }
  return factors;
}

std::vector<FactorPtr> make_consistency_factors(
    const std::vector<Trajectory>& trajs,
    const Assignment& weight_source,
    const TrustParams& params) {
  check_aligned(trajs);
  params.validate();
  const auto ordered = by_agent_id(trajs);
  const size_t steps = ordered.front()->states.size();
  const double dt = ordered.front()->dt;

  std::vector<FactorPtr> factors;
  for (size_t i = 0; i < ordered.size(); ++i) {
    for (size_t j = i + 1; j < ordered.size(); ++j) {
      const Trajectory& a = *ordered[i];
      const Trajectory& b = *ordered[j];
      for (size_t k = 0; k + 1 < steps; ++k) {
        const Vec2 pa = weight_source.at(a.key(k)).position;
        const Vec2 pb = weight_source.at(b.key(k)).position;
        const double w = std::exp(-(pa - pb).norm() / params.consistency_range);
        factors.push_back(std::make_shared<ConsistencyFactor>(
            a.key(k), a.key(k + 1), b.key(k), b.key(k + 1), dt, w,
            params.sigma_consistency));
      }
    }
  }
  return factors;
}

std::vector<FactorPtr> make_fixed_proximity_factors(
    const Trajectory& self, double radius_self,
    const Trajectory& neighbor, double radius_neighbor,
    double eps, double sigma) {
  check_aligned({self, neighbor});
  std::vector<FactorPtr> factors;
  factors.reserve(self.states.size());
  for (size_t k = 0; k < self.states.size(); ++k) {
    factors.push_back(std::make_shared<FixedProximityFactor>(
        self.key(k), radius_self, neighbor.states[k].position, radius_neighbor,
        eps, sigma));
  }
  return factors;
}

std::vector<FactorPtr> make_fixed_consistency_factors(
    const Trajectory& self, const Trajectory& neighbor,
    const TrustParams& params) {
  check_aligned({self, neighbor});
  params.validate();
  std::vector<FactorPtr> factors;
  const double dt = self.dt;
  for (size_t k = 0; k + 1 < self.states.size(); ++k) {
    const Vec2 d = self.states[k].position - neighbor.states[k].position;
    const double w = std::exp(-d.norm() / params.consistency_range);
    const Vec2 accel_n =
        (neighbor.states[k + 1].velocity - neighbor.states[k].velocity) / dt;
    factors.push_back(std::make_shared<FixedConsistencyFactor>(
        self.key(k), self.key(k + 1), dt, accel_n, w, params.sigma_consistency));
  }
  return factors;
}

}  // namespace trustfg
