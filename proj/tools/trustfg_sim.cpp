#include <cstdint>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trustfg/errors.hpp"
#include "trustfg/io.hpp"
#include "trustfg/metrics.hpp"
#include "trustfg/scenario.hpp"

namespace {

using trustfg::RunResult;
using trustfg::ScenarioConfig;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNotConverged = 2;

struct CommonArgs {
  std::string scenario;
  std::string out_dir;
  std::vector<std::string> disable;
  std::string mode;
  std::uint64_t seed = 0;
  bool mode_given = false;
  bool seed_given = false;
};

ScenarioConfig load_with_overrides(const CommonArgs& args) {
  ScenarioConfig cfg = trustfg::load_scenario(args.scenario);
  for (const auto& kind : args.disable) {
    if (kind == "gp") {
      cfg.toggles.gp = false;
    } else if (kind == "obstacle") {
      cfg.toggles.obstacle = false;
    } else if (kind == "proximity") {
      cfg.toggles.proximity = false;
    } else if (kind == "consistency") {
      cfg.toggles.consistency = false;
    } else if (kind == "transparency") {
      cfg.toggles.transparency = false;
    } else {
      throw trustfg::ConfigError(
          "--disable: unknown factor kind \"" + kind +
          "\" (expected gp, obstacle, proximity, consistency, or transparency)");
    }
  }
  if (args.mode_given) {
    cfg.mode = args.mode == "joint" ? trustfg::RunMode::kJoint
                                    : trustfg::RunMode::kDecentralized;
  }
  if (args.seed_given) cfg.seed = args.seed;
  return cfg;
}

void write_run_outputs(const std::string& dir, const ScenarioConfig& cfg,
                       const RunResult& result) {
  std::filesystem::create_directories(dir);
  const auto violations = trustfg::proximity_violations(
      result.trajectories, cfg.radii(), cfg.trust.eps_proximity);
  trustfg::write_file_atomic(dir + "/trajectories.csv",
                             trustfg::trajectories_csv(result.trajectories));
  trustfg::write_file_atomic(dir + "/metrics.json",
                             trustfg::metrics_json(cfg, result, violations));
  trustfg::write_file_atomic(dir + "/trust_report.json",
                             trustfg::trust_report_json(result));
  trustfg::write_file_atomic(dir + "/plot.svg",
                             trustfg::plot_svg(cfg, result, violations));
}

int cmd_simulate(const CommonArgs& args) {
  const ScenarioConfig cfg = load_with_overrides(args);
  const RunResult result = trustfg::run_scenario(cfg);
  write_run_outputs(args.out_dir, cfg, result);
  if (!result.converged) {
    std::fprintf(stderr, "solve did not converge (%s mode)\n",
                 trustfg::run_mode_name(result.mode));
    return kExitNotConverged;
  }
  return kExitOk;
}

ordered_json matrix_block(const trustfg::MinDistanceMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) row.push_back(m.values(i, j));
    rows.push_back(row);
  }
  return rows;
}

// Smallest distance any other agent keeps to `target`, time-synchronized
// center distance (the robust denominator for before/after ratios).
double min_center_distance_to(const RunResult& result, int target) {
  const auto& m = result.report.min_distance_center;
  double best = std::numeric_limits<double>::infinity();
  for (int id : m.agent_ids) {
    if (id == target) continue;
    best = std::min(best, m.at(id, target));
  }
  return best;
}

int cmd_ablate(const CommonArgs& args) {
  ScenarioConfig base = load_with_overrides(args);
  if (base.misinfo.empty()) {
    // the transparency comparison needs a misinforming agent to exist
    trustfg::MisinfoSpec spec;
    spec.agent_id = base.agent_ids().front();
    spec.fraction = 0.4;
    spec.magnitude = 0.3;
    spec.seed = 7;
    base.misinfo.push_back(spec);
  }

  struct Toggle {
    const char* name;
    bool proximity;
    bool consistency;
    bool transparency;
  };
  const Toggle kRuns[] = {
      {"all_on", true, true, true},
      {"proximity_off", false, true, true},
      {"consistency_off", true, false, true},
      {"transparency_off", true, true, false},
  };

  std::vector<std::pair<ScenarioConfig, RunResult>> results;
  bool all_converged = true;
  for (const Toggle& t : kRuns) {
    ScenarioConfig cfg = base;
    cfg.toggles.proximity = t.proximity;
    cfg.toggles.consistency = t.consistency;
    cfg.toggles.transparency = t.transparency;
    results.emplace_back(cfg, trustfg::run_scenario(cfg));
    all_converged = all_converged && results.back().second.converged;
  }

  ordered_json out;
  for (size_t i = 0; i < results.size(); ++i) {
    const auto& [cfg, res] = results[i];
    ordered_json entry;
    entry["converged"] = res.converged;
    entry["agent_ids"] = res.report.min_distance_synchronized.agent_ids;
    entry["min_distance_synchronized_surface"] =
        matrix_block(res.report.min_distance_synchronized);
    entry["min_distance_synchronized_center"] =
        matrix_block(res.report.min_distance_center);
    entry["min_distance_geometric_surface"] =
        matrix_block(res.report.min_distance_geometric);
    entry["global_min_surface"] = res.report.min_distance_synchronized.global_min();
    entry["inconsistency_fraction"] = res.report.inconsistency.fraction;
    out["runs"][kRuns[i].name] = entry;
  }

  const RunResult& all_on = results[0].second;
  const RunResult& proximity_off = results[1].second;
  const RunResult& consistency_off = results[2].second;
  const RunResult& transparency_off = results[3].second;

  ordered_json derived;
  derived["proximity_gain"] =
      all_on.report.min_distance_synchronized.global_min() -
      proximity_off.report.min_distance_synchronized.global_min();
  derived["inconsistency_all_on"] = all_on.report.inconsistency.fraction;
  derived["inconsistency_consistency_off"] = consistency_off.report.inconsistency.fraction;

  const int misinformer = base.misinfo.front().agent_id;
  const double d_on = min_center_distance_to(all_on, misinformer);
  const double d_off = min_center_distance_to(transparency_off, misinformer);
  ordered_json transparency;
  transparency["misinforming_agent"] = misinformer;
  transparency["min_center_distance_transparency_on"] = d_on;
  transparency["min_center_distance_transparency_off"] = d_off;
  transparency["distance_ratio"] = d_off > 0.0 ? d_on / d_off : 0.0;
  derived["transparency"] = transparency;
  out["derived"] = derived;

  std::filesystem::create_directories(args.out_dir);
  for (size_t i = 0; i < results.size(); ++i) {
    write_run_outputs(args.out_dir + "/" + kRuns[i].name, results[i].first,
                      results[i].second);
  }
  trustfg::write_file_atomic(args.out_dir + "/comparison.json", out.dump(2) + "\n");

  if (!all_converged) {
    std::fprintf(stderr, "at least one ablation run did not converge\n");
    return kExitNotConverged;
  }
  return kExitOk;
}

void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--scenario", args.scenario, "scenario JSON file")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--disable", args.disable,
                  "factor kind to turn off: gp, obstacle, proximity, consistency, "
                  "transparency (repeatable)");
  cmd->add_option("--mode", args.mode, "override run mode")
      ->check(CLI::IsMember({"joint", "decentralized"}));
  cmd->add_option("--seed", args.seed, "override the scenario seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent trajectory optimizer over GP factor graphs"};
  app.require_subcommand(1);

  CommonArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "run one scenario");
  add_common_options(simulate, sim_args);

  CommonArgs ablate_args;
  CLI::App* ablate = app.add_subcommand(
      "ablate", "run the scenario once per trust-factor toggle and compare");
  add_common_options(ablate, ablate_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (app.got_subcommand(simulate)) {
      sim_args.mode_given = simulate->count("--mode") > 0;
      sim_args.seed_given = simulate->count("--seed") > 0;
      return cmd_simulate(sim_args);
    }
    ablate_args.mode_given = ablate->count("--mode") > 0;
    ablate_args.seed_given = ablate->count("--seed") > 0;
    return cmd_ablate(ablate_args);
  } catch (const trustfg::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const trustfg::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitConfig;
  } catch (const trustfg::Error& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return kExitNotConverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return kExitNotConverged;
  }
}
