#include "trustfg/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "trustfg/errors.hpp"

namespace trustfg {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; })) {
      fail(path + "." + it.key(), "unknown key");
    }
  }
}

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

double require_number(const json& obj, const std::string& path, const std::string& key) {
  const json* v = find(obj, key);
  if (!v) fail(path + "." + key, "missing required key");
  return number_at(*v, path + "." + key);
}

double optional_number(const json& obj, const std::string& path, const std::string& key,
                       double fallback) {
  const json* v = find(obj, key);
  return v ? number_at(*v, path + "." + key) : fallback;
}

int require_int(const json& obj, const std::string& path, const std::string& key) {
  const json* v = find(obj, key);
  if (!v) fail(path + "." + key, "missing required key");
  if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
  return v->get<int>();
}

bool optional_bool(const json& obj, const std::string& path, const std::string& key,
                   bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "." + key, "expected true or false");
  return v->get<bool>();
}

std::uint64_t optional_u64(const json& obj, const std::string& path,
                           const std::string& key, std::uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_unsigned() && !v->is_number_integer()) {
    fail(path + "." + key, "expected a non-negative integer");
  }
  if (v->is_number_integer() && v->get<std::int64_t>() < 0) {
    fail(path + "." + key, "expected a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

Vec2 require_vec2(const json& obj, const std::string& path, const std::string& key) {
  const json* v = find(obj, key);
  if (!v) fail(path + "." + key, "missing required key");
  if (!v->is_array() || v->size() != 2) fail(path + "." + key, "expected [x, y]");
  return Vec2(number_at((*v)[0], path + "." + key + "[0]"),
              number_at((*v)[1], path + "." + key + "[1]"));
}

Vec2 optional_vec2(const json& obj, const std::string& path, const std::string& key,
                   const Vec2& fallback) {
  if (!find(obj, key)) return fallback;
  return require_vec2(obj, path, key);
}

AgentSpec parse_agent(const json& obj, const std::string& path) {
  check_keys(obj, path, {"id", "start", "start_velocity", "goal", "goal_velocity", "radius"});
  AgentSpec a;
  a.id = require_int(obj, path, "id");
  a.start_position = require_vec2(obj, path, "start");
  a.goal_position = require_vec2(obj, path, "goal");
  a.start_velocity = optional_vec2(obj, path, "start_velocity", Vec2::Zero());
  a.goal_velocity = optional_vec2(obj, path, "goal_velocity", Vec2::Zero());
  a.radius = require_number(obj, path, "radius");
  return a;
}

MisinfoSpec parse_misinfo(const json& obj, const std::string& path) {
  check_keys(obj, path, {"agent_id", "fraction", "magnitude", "seed"});
  MisinfoSpec m;
  m.agent_id = require_int(obj, path, "agent_id");
  m.fraction = require_number(obj, path, "fraction");
  m.magnitude = require_number(obj, path, "magnitude");
  m.seed = optional_u64(obj, path, "seed", 0);
  return m;
}

// Scenario-level seed folded into each injection seed; a zero scenario seed
// leaves the per-spec seeds untouched.
MisinfoSpec effective_spec(const ScenarioConfig& cfg, MisinfoSpec spec) {
  spec.seed ^= cfg.seed * 0x9e3779b97f4a7c15ULL;
  return spec;
}

Assignment assignment_of(const std::vector<Trajectory>& trajs) {
  Assignment values;
  for (const auto& t : trajs) {
    for (int k = 0; k < t.steps(); ++k) values.set(t.key(k), t.states[k]);
  }
  return values;
}

const Trajectory& traj_of(const std::vector<Trajectory>& trajs, int agent_id) {
  for (const auto& t : trajs) {
    if (t.agent_id == agent_id) return t;
  }
  throw ParameterError("no trajectory for agent " + std::to_string(agent_id));
}

Trajectory& traj_of(std::vector<Trajectory>& trajs, int agent_id) {
  for (auto& t : trajs) {
    if (t.agent_id == agent_id) return t;
  }
  throw ParameterError("no trajectory for agent " + std::to_string(agent_id));
}

const AgentSpec& agent_of(const ScenarioConfig& cfg, int agent_id) {
  for (const auto& a : cfg.agents) {
    if (a.id == agent_id) return a;
  }
  throw ParameterError("no agent spec for id " + std::to_string(agent_id));
}

std::vector<Trajectory> initial_trajectories(const ScenarioConfig& cfg) {
  std::vector<Trajectory> out;
  out.reserve(cfg.agents.size());
  for (int id : cfg.agent_ids()) {
    for (const auto& a : cfg.agents) {
      if (a.id == id) {
        out.push_back(straight_line_init(a.id, a.start_position, a.goal_position,
                                         cfg.steps, cfg.dt));
      }
    }
  }
  return out;
}

// Discrepancies from misinformed broadcasts and the per-pair clearance
// thresholds the run will actually use.
TransparencyReport transparency_preprocess(const ScenarioConfig& cfg,
                                           const std::vector<Trajectory>& truth) {
  TransparencyReport rep;
  for (const auto& t : truth) rep.discrepancy[t.agent_id] = 0.0;
  for (const auto& spec : cfg.misinfo) {
    const Trajectory& t = traj_of(truth, spec.agent_id);
    const Trajectory shared = inject_misinformation(t, effective_spec(cfg, spec));
    const double delta =
        compute_discrepancy(shared, positions_of(t), cfg.trust.transparency_tol);
    rep.discrepancy[spec.agent_id] = std::max(rep.discrepancy[spec.agent_id], delta);
  }
  const auto ids = cfg.agent_ids();
  for (size_t i = 0; i < ids.size(); ++i) {
    for (size_t j = i + 1; j < ids.size(); ++j) {
      const double eps =
          cfg.toggles.transparency
              ? inflate_epsilon(cfg.trust.eps_proximity, rep.discrepancy.at(ids[i]),
                                rep.discrepancy.at(ids[j]), cfg.trust.transparency_beta)
              : cfg.trust.eps_proximity;
      rep.inflated_eps[make_agent_pair(ids[i], ids[j])] = eps;
    }
  }
  return rep;
}

std::map<int, double> score_agents(const ScenarioConfig& cfg,
                                   const std::vector<Trajectory>& trajs,
                                   const TransparencyReport& trep) {
  std::map<int, double> debt;
  for (const auto& t : trajs) debt[t.agent_id] = 0.0;
  const auto radii = cfg.radii();
  const size_t m = trajs.size();
  if (m >= 2) {
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = i + 1; j < m; ++j) {
        const Trajectory& a = trajs[i];
        const Trajectory& b = trajs[j];
        const double rsum = radii.at(a.agent_id) + radii.at(b.agent_id);
        const double eps = trep.inflated_eps.at(make_agent_pair(a.agent_id, b.agent_id));
        for (int k = 0; k < a.steps(); ++k) {
          const double d = (a.states[k].position - b.states[k].position).norm() - rsum;
          const double h = proximity_hinge(d, eps) / eps;
          debt[a.agent_id] += h;
          debt[b.agent_id] += h;
        }
      }
    }
    const double norm = static_cast<double>(cfg.steps) * static_cast<double>(m - 1);
    for (auto& [id, v] : debt) v /= norm;
  }
  std::map<int, double> scores;
  for (const auto& [id, v] : debt) {
    scores[id] = 1.0 - std::min(1.0, trep.discrepancy.at(id) + v);
  }
  return scores;
}

TrustReport make_report(const ScenarioConfig& cfg,
                        const std::vector<Trajectory>& trajs,
                        const TransparencyReport& trep) {
  TrustReport rep;
  rep.transparency = trep;
  const auto radii = cfg.radii();
  rep.min_distance_geometric = min_distance_matrix(trajs, radii);
  rep.min_distance_synchronized = synchronized_min_distance_matrix(trajs, radii, true);
  rep.min_distance_center = synchronized_min_distance_matrix(trajs, radii, false);
  rep.inconsistency =
      inconsistency_metric(trajs, 0.5, cfg.trust.consistency_range);
  rep.trust_scores = score_agents(cfg, trajs, trep);
  return rep;
}

// Factors of one agent optimizing alone: own priors and obstacles, plus
// hinges against the latest broadcast plans of everyone else.
FactorGraph build_local_graph(const ScenarioConfig& cfg, const AgentSpec& agent,
                              const Trajectory& own,
                              const std::map<int, Trajectory>& broadcasts,
                              const TransparencyReport& trep,
                              const std::shared_ptr<const GridSDF>& sdf) {
  FactorGraph g;
  for (int k = 0; k < own.steps(); ++k) g.add_variable(own.key(k), own.states[k]);

  const StateVariable start{agent.start_position, agent.start_velocity};
  const StateVariable goal{agent.goal_position, agent.goal_velocity};
  for (const auto& f : make_gp_prior_factors(own, cfg.gp, start, goal)) {
    if (!cfg.toggles.gp && f->kind() == FactorKind::kGpPrior) continue;
    g.add_factor(f);
  }
  if (cfg.toggles.obstacle) {
    for (const auto& f : make_obstacle_factors(own, sdf, RobotShape{agent.radius},
                                               cfg.obstacle_eps, cfg.obstacle_sigma)) {
      g.add_factor(f);
    }
  }
  const auto radii = cfg.radii();
  for (const auto& [other_id, other] : broadcasts) {
    if (other_id == agent.id) continue;
    if (cfg.toggles.proximity) {
      const double eps = trep.inflated_eps.at(make_agent_pair(agent.id, other_id));
      for (const auto& f : make_fixed_proximity_factors(
               own, agent.radius, other, radii.at(other_id), eps,
               cfg.trust.sigma_proximity)) {
        g.add_factor(f);
      }
    }
    if (cfg.toggles.consistency) {
      for (const auto& f : make_fixed_consistency_factors(own, other, cfg.trust)) {
        g.add_factor(f);
      }
    }
  }
  return g;
}

}  // namespace

void ScenarioConfig::validate() const {
  try {
    world.validate();
  } catch (const Error& e) {
    fail("world", e.what());
  }
  if (agents.empty()) fail("agents", "need at least one agent");
  if (steps < 2) fail("steps", "must be at least 2");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt", "must be positive");

  const Vec2 lo = world.origin;
  const Vec2 hi = world.origin +
                  Vec2(world.width * world.cell_size, world.height * world.cell_size);
  std::set<int> ids;
  for (size_t i = 0; i < agents.size(); ++i) {
    const std::string path = "agents[" + std::to_string(i) + "]";
    const AgentSpec& a = agents[i];
    if (!ids.insert(a.id).second) fail(path + ".id", "duplicate agent id");
    if (!(a.radius > 0.0) || !std::isfinite(a.radius)) {
      fail(path + ".radius", "must be positive");
    }
    auto inside = [&](const Vec2& p) {
      return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
    };
    if (!inside(a.start_position)) fail(path + ".start", "outside the world bounds");
    if (!inside(a.goal_position)) fail(path + ".goal", "outside the world bounds");
  }

  try {
    gp.validate();
  } catch (const Error& e) {
    fail("gp", e.what());
  }
  if (!(obstacle_eps > 0.0)) fail("obstacle.eps", "must be positive");
  if (!(obstacle_sigma > 0.0)) fail("obstacle.sigma", "must be positive");
  try {
    trust.validate();
  } catch (const Error& e) {
    fail("trust_params", e.what());
  }

  for (size_t i = 0; i < misinfo.size(); ++i) {
    const std::string path = "misinfo[" + std::to_string(i) + "]";
    const MisinfoSpec& m = misinfo[i];
    if (ids.count(m.agent_id) == 0) fail(path + ".agent_id", "no such agent");
    if (m.fraction < 0.0 || m.fraction > 1.0) fail(path + ".fraction", "must lie in [0,1]");
    if (!(m.magnitude > 0.0)) fail(path + ".magnitude", "must be positive");
  }
}

std::map<int, double> ScenarioConfig::radii() const {
  std::map<int, double> out;
  for (const auto& a : agents) out[a.id] = a.radius;
  return out;
}

std::vector<int> ScenarioConfig::agent_ids() const {
  std::vector<int> ids;
  ids.reserve(agents.size());
  for (const auto& a : agents) ids.push_back(a.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "scenario",
             {"world", "agents", "steps", "dt", "gp", "obstacle", "trust_params",
              "factors", "misinfo", "mode", "seed"});

  ScenarioConfig cfg;
  const json* world = find(root, "world");
  if (!world) fail("scenario.world", "missing required key");
  if (!world->is_string()) fail("scenario.world", "expected a grid file path");
  cfg.world_path = world->get<std::string>();
  std::filesystem::path grid_path(cfg.world_path);
  if (grid_path.is_relative() && !base_dir.empty()) {
    grid_path = std::filesystem::path(base_dir) / grid_path;
  }
  try {
    cfg.world = load_occupancy_grid(grid_path.string());
  } catch (const Error& e) {
    fail("scenario.world", e.what());
  }

  const json* agents = find(root, "agents");
  if (!agents) fail("scenario.agents", "missing required key");
  if (!agents->is_array()) fail("scenario.agents", "expected an array");
  for (size_t i = 0; i < agents->size(); ++i) {
    cfg.agents.push_back(
        parse_agent((*agents)[i], "scenario.agents[" + std::to_string(i) + "]"));
  }

  cfg.steps = require_int(root, "scenario", "steps");
  cfg.dt = require_number(root, "scenario", "dt");

  if (const json* gp = find(root, "gp")) {
    check_keys(*gp, "scenario.gp", {"qc", "anchor_pos_sigma", "anchor_vel_sigma"});
    cfg.gp.qc = optional_number(*gp, "scenario.gp", "qc", cfg.gp.qc);
    cfg.gp.anchor_pos_sigma =
        optional_number(*gp, "scenario.gp", "anchor_pos_sigma", cfg.gp.anchor_pos_sigma);
    cfg.gp.anchor_vel_sigma =
        optional_number(*gp, "scenario.gp", "anchor_vel_sigma", cfg.gp.anchor_vel_sigma);
  }
  if (const json* obs = find(root, "obstacle")) {
    check_keys(*obs, "scenario.obstacle", {"eps", "sigma"});
    cfg.obstacle_eps = optional_number(*obs, "scenario.obstacle", "eps", cfg.obstacle_eps);
    cfg.obstacle_sigma =
        optional_number(*obs, "scenario.obstacle", "sigma", cfg.obstacle_sigma);
  }
  if (const json* trust = find(root, "trust_params")) {
    check_keys(*trust, "scenario.trust_params",
               {"eps_proximity", "sigma_proximity", "sigma_consistency",
                "consistency_range", "transparency_beta", "transparency_tol"});
    const std::string p = "scenario.trust_params";
    cfg.trust.eps_proximity =
        optional_number(*trust, p, "eps_proximity", cfg.trust.eps_proximity);
    cfg.trust.sigma_proximity =
        optional_number(*trust, p, "sigma_proximity", cfg.trust.sigma_proximity);
    cfg.trust.sigma_consistency =
        optional_number(*trust, p, "sigma_consistency", cfg.trust.sigma_consistency);
    cfg.trust.consistency_range =
        optional_number(*trust, p, "consistency_range", cfg.trust.consistency_range);
    cfg.trust.transparency_beta =
        optional_number(*trust, p, "transparency_beta", cfg.trust.transparency_beta);
    cfg.trust.transparency_tol =
        optional_number(*trust, p, "transparency_tol", cfg.trust.transparency_tol);
  }
  if (const json* toggles = find(root, "factors")) {
    check_keys(*toggles, "scenario.factors",
               {"gp", "obstacle", "proximity", "consistency", "transparency"});
    const std::string p = "scenario.factors";
    cfg.toggles.gp = optional_bool(*toggles, p, "gp", cfg.toggles.gp);
    cfg.toggles.obstacle = optional_bool(*toggles, p, "obstacle", cfg.toggles.obstacle);
    cfg.toggles.proximity = optional_bool(*toggles, p, "proximity", cfg.toggles.proximity);
    cfg.toggles.consistency =
        optional_bool(*toggles, p, "consistency", cfg.toggles.consistency);
    cfg.toggles.transparency =
        optional_bool(*toggles, p, "transparency", cfg.toggles.transparency);
  }
  if (const json* mis = find(root, "misinfo")) {
    if (!mis->is_array()) fail("scenario.misinfo", "expected an array");
    for (size_t i = 0; i < mis->size(); ++i) {
      cfg.misinfo.push_back(
          parse_misinfo((*mis)[i], "scenario.misinfo[" + std::to_string(i) + "]"));
    }
  }
  if (const json* mode = find(root, "mode")) {
    if (!mode->is_string()) fail("scenario.mode", "expected \"joint\" or \"decentralized\"");
    const std::string m = mode->get<std::string>();
    if (m == "joint") {
      cfg.mode = RunMode::kJoint;
    } else if (m == "decentralized") {
      cfg.mode = RunMode::kDecentralized;
    } else {
      fail("scenario.mode", "expected \"joint\" or \"decentralized\", got \"" + m + "\"");
    }
  }
  cfg.seed = optional_u64(root, "scenario", "seed", 0);

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(),
                             std::filesystem::path(path).parent_path().string());
}

Trajectory straight_line_init(int agent_id, const Vec2& start, const Vec2& goal,
                              int steps, double dt) {
  if (steps < 2) throw ParameterError("straight-line init needs at least 2 steps");
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  Trajectory traj;
  traj.agent_id = agent_id;
  traj.dt = dt;
  traj.states.reserve(steps);
  const Vec2 velocity = (goal - start) / ((steps - 1) * dt);
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / (steps - 1);
    traj.states.push_back({start + t * (goal - start), velocity});
  }
  return traj;
}

FactorGraph build_joint_graph(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto inits = initial_trajectories(cfg);
  return build_joint_graph(cfg, inits, transparency_preprocess(cfg, inits).inflated_eps);
}

FactorGraph build_joint_graph(const ScenarioConfig& cfg,
                              const std::vector<Trajectory>& trajs,
                              const std::map<AgentPair, double>& inflated_eps) {
  cfg.validate();
  if (trajs.size() != cfg.agents.size()) {
    throw AlignmentError("trajectory count does not match agent count");
  }
  for (const auto& t : trajs) {
    if (t.steps() != cfg.steps || std::abs(t.dt - cfg.dt) > 1e-12) {
      throw AlignmentError("trajectory layout does not match the scenario");
    }
  }

  FactorGraph g;
  for (int id : cfg.agent_ids()) {
    const Trajectory& t = traj_of(trajs, id);
    for (int k = 0; k < t.steps(); ++k) g.add_variable(t.key(k), t.states[k]);
  }

  std::shared_ptr<const GridSDF> sdf;
  if (cfg.toggles.obstacle) {
    sdf = std::make_shared<const GridSDF>(build_sdf(cfg.world));
  }
  for (int id : cfg.agent_ids()) {
    const Trajectory& t = traj_of(trajs, id);
    const AgentSpec& spec = agent_of(cfg, id);
    const StateVariable start{spec.start_position, spec.start_velocity};
    const StateVariable goal{spec.goal_position, spec.goal_velocity};
    for (const auto& f : make_gp_prior_factors(t, cfg.gp, start, goal)) {
      if (!cfg.toggles.gp && f->kind() == FactorKind::kGpPrior) continue;
      g.add_factor(f);
    }
    if (cfg.toggles.obstacle) {
      for (const auto& f : make_obstacle_factors(t, sdf, RobotShape{spec.radius},
                                                 cfg.obstacle_eps, cfg.obstacle_sigma)) {
        g.add_factor(f);
      }
    }
  }
  if (cfg.agents.size() >= 2) {
    if (cfg.toggles.proximity) {
      for (const auto& f :
           make_proximity_factors(trajs, cfg.radii(), cfg.trust, inflated_eps)) {
        g.add_factor(f);
      }
    }
    if (cfg.toggles.consistency) {
      for (const auto& f :
           make_consistency_factors(trajs, assignment_of(trajs), cfg.trust)) {
        g.add_factor(f);
      }
    }
  }
  return g;
}

Trajectory inject_misinformation(const Trajectory& traj, const MisinfoSpec& spec) {
  traj.validate();
  if (spec.fraction < 0.0 || spec.fraction > 1.0) {
    throw ParameterError("misinfo fraction must lie in [0,1]");
  }
  if (!(spec.magnitude > 0.0)) throw ParameterError("misinfo magnitude must be positive");

  Trajectory shared = traj;
  const int n = traj.steps();
  const double raw = spec.fraction * n;
  const double nearest = std::round(raw);
  int count = std::abs(raw - nearest) < 1e-9 ? static_cast<int>(nearest)
                                             : static_cast<int>(std::ceil(raw));
  count = std::min(count, n);
  if (count <= 0) return shared;

  std::mt19937_64 rng(spec.seed);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::sort(idx.begin(), idx.begin() + count);
  for (int i = 0; i < count; ++i) {
    // engine bits -> [0,1) directly, so the stream is identical everywhere
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double angle = 2.0 * std::numbers::pi * u;
    shared.states[idx[i]].position +=
        spec.magnitude * Vec2(std::cos(angle), std::sin(angle));
  }
  return shared;
}

RunResult run_joint(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.mode != RunMode::kJoint) {
    throw ConfigError("mode: joint runner invoked on a non-joint scenario");
  }

  std::vector<Trajectory> current = initial_trajectories(cfg);
  const TransparencyReport trep = transparency_preprocess(cfg, current);

  RunResult out;
  out.mode = RunMode::kJoint;

  // Consistency weights are frozen per linearization; one extra pass rebuilds
  // them from the first optimum so the weights describe the plan they act on.
  const int passes = cfg.toggles.consistency && cfg.agents.size() >= 2 ? 2 : 1;
  SolverConfig solver_cfg;
  for (int pass = 0; pass < passes; ++pass) {
    FactorGraph g = build_joint_graph(cfg, current, trep.inflated_eps);
    out.solve = levenberg_marquardt(g, g.initial_assignment(), solver_cfg);
    std::vector<Trajectory> next;
    next.reserve(current.size());
    for (int id : cfg.agent_ids()) {
      next.push_back(trajectory_from(out.solve.solution, id, cfg.steps, cfg.dt));
    }
    current = std::move(next);
  }

  out.converged = out.solve.converged;
  out.trajectories = current;
  out.report = make_report(cfg, current, trep);
  return out;
}

RunResult run_decentralized(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.mode != RunMode::kDecentralized) {
    throw ConfigError("mode: decentralized runner invoked on a non-decentralized scenario");
  }

  constexpr int kMaxRounds = 50;
  constexpr double kChangeTol = 1e-4;

  std::vector<Trajectory> truth = initial_trajectories(cfg);
  const TransparencyReport trep = transparency_preprocess(cfg, truth);
  const auto ids = cfg.agent_ids();

  auto shared_view = [&](const Trajectory& t) {
    for (const auto& spec : cfg.misinfo) {
      if (spec.agent_id == t.agent_id) {
        return inject_misinformation(t, effective_spec(cfg, spec));
      }
    }
    return t;
  };

  std::map<int, Trajectory> broadcasts;
  for (const auto& t : truth) broadcasts.emplace(t.agent_id, shared_view(t));

  std::shared_ptr<const GridSDF> sdf;
  if (cfg.toggles.obstacle) sdf = std::make_shared<const GridSDF>(build_sdf(cfg.world));

  RunResult out;
  out.mode = RunMode::kDecentralized;
  SolverConfig solver_cfg;

  for (int round = 1; round <= kMaxRounds; ++round) {
    double max_change = 0.0;
    for (int id : ids) {
      Trajectory& own = traj_of(truth, id);
      FactorGraph g = build_local_graph(cfg, agent_of(cfg, id), own, broadcasts, trep, sdf);
      out.solve = levenberg_marquardt(g, g.initial_assignment(), solver_cfg);
      Trajectory updated = trajectory_from(out.solve.solution, id, cfg.steps, cfg.dt);
      for (int k = 0; k < cfg.steps; ++k) {
        max_change = std::max(
            max_change, (updated.states[k].position - own.states[k].position).norm());
      }
      own = std::move(updated);
      broadcasts.at(id) = shared_view(own);
    }

    double round_cost = 0.0;
    for (int id : ids) {
      const Trajectory& own = traj_of(truth, id);
      FactorGraph g = build_local_graph(cfg, agent_of(cfg, id), own, broadcasts, trep, sdf);
      round_cost += total_cost(g, g.initial_assignment());
    }
    out.round_costs.push_back(round_cost);
    out.rounds = round;
    if (max_change < kChangeTol) {
      out.converged = true;
      break;
    }
  }

  out.trajectories = truth;
  out.report = make_report(cfg, truth, trep);
  return out;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  return cfg.mode == RunMode::kJoint ? run_joint(cfg) : run_decentralized(cfg);
}

}  // namespace trustfg
