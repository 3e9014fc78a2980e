#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trustfg/factor_graph.hpp"
#include "trustfg/gp_trajectory.hpp"
#include "trustfg/metrics.hpp"
#include "trustfg/solver.hpp"
#include "trustfg/trust_factors.hpp"
#include "trustfg/world.hpp"

namespace trustfg {

struct AgentSpec {
  int id = 0;
  Vec2 start_position = Vec2::Zero();
  Vec2 start_velocity = Vec2::Zero();
  Vec2 goal_position = Vec2::Zero();
  Vec2 goal_velocity = Vec2::Zero();
  double radius = 0.1;
};

// One agent broadcasting a partially corrupted plan: ceil(fraction * N) of
// its shared positions are offset by `magnitude` in seeded random directions.
struct MisinfoSpec {
  int agent_id = 0;
  double fraction = 0.0;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

struct FactorToggles {
  bool gp = true;
  bool obstacle = true;
  bool proximity = true;
  bool consistency = true;
  bool transparency = true;
};

enum class RunMode { kJoint, kDecentralized };

struct ScenarioConfig {
  OccupancyGrid world;
  std::string world_path;  // as referenced by the scenario file
  std::vector<AgentSpec> agents;
  int steps = 30;
  double dt = 0.2;
  GPPriorParams gp;
  double obstacle_eps = 0.1;
  double obstacle_sigma = 0.02;
  TrustParams trust;
  FactorToggles toggles;
  std::vector<MisinfoSpec> misinfo;
  RunMode mode = RunMode::kJoint;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError naming the offending field
  std::map<int, double> radii() const;
  std::vector<int> agent_ids() const;  // sorted ascending
};

// Strict parser: unknown keys anywhere are rejected with their field path.
// The world grid path is resolved relative to the scenario file's directory.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario_text(const std::string& text,
                                   const std::string& base_dir);

Trajectory straight_line_init(int agent_id, const Vec2& start, const Vec2& goal,
                              int steps, double dt);

// Joint graph from straight-line initial guesses; thresholds follow the
// config (transparency preprocessing applied when enabled).
FactorGraph build_joint_graph(const ScenarioConfig& cfg);

// Joint graph linearization-ready at the given trajectories: consistency
// weights are frozen from these states and proximity thresholds may be
// inflated per pair (transparency preprocessing output).
FactorGraph build_joint_graph(const ScenarioConfig& cfg,
                              const std::vector<Trajectory>& trajs,
                              const std::map<AgentPair, double>& inflated_eps);

// The corrupted copy an agent shares; the original is untouched.
Trajectory inject_misinformation(const Trajectory& traj, const MisinfoSpec& spec);

struct TrustReport {
  TransparencyReport transparency;
  std::map<int, double> trust_scores;     // 1 - (discrepancy + clearance debt), floored at 0
  MinDistanceMatrix min_distance_geometric;     // surface, whole polylines
  MinDistanceMatrix min_distance_synchronized;  // surface, common time
  MinDistanceMatrix min_distance_center;        // center-to-center, common time
  InconsistencyResult inconsistency;
};

struct RunResult {
  RunMode mode = RunMode::kJoint;
  std::vector<Trajectory> trajectories;  // sorted by agent id
  TrustReport report;
  SolveResult solve;                 // final solve (joint) / last agent turn (decentralized)
  bool converged = false;
  int rounds = 0;                    // decentralized only
  std::vector<double> round_costs;   // decentralized: per-round total local cost
};

RunResult run_joint(const ScenarioConfig& cfg);
RunResult run_decentralized(const ScenarioConfig& cfg);
RunResult run_scenario(const ScenarioConfig& cfg);  // dispatch on cfg.mode

}  // namespace trustfg
