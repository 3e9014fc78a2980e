#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "trustfg/errors.hpp"
#include "trustfg/io.hpp"
#include "trustfg/metrics.hpp"
#include "trustfg/scenario.hpp"

using namespace trustfg;
using nlohmann::json;

namespace {

std::size_t count_substr(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

ScenarioConfig crossing_config() {
  ScenarioConfig cfg;
  cfg.world.origin = Vec2(0, 0);
  cfg.world.cell_size = 0.1;
  cfg.world.width = 30;
  cfg.world.height = 30;
  cfg.world.cells.assign(900, 0);
  // a small obstacle block in one corner, away from the paths
  for (int iy = 2; iy < 5; ++iy) {
    for (int ix = 24; ix < 28; ++ix) cfg.world.cells[iy * 30 + ix] = 1;
  }
  cfg.steps = 12;
  cfg.dt = 0.2;
  const double duration = (cfg.steps - 1) * cfg.dt;
  AgentSpec a;
  a.id = 1;
  a.start_position = Vec2(0.3, 1.5);
  a.goal_position = Vec2(2.7, 1.5);
  a.start_velocity = Vec2(2.4 / duration, 0);
  a.goal_velocity = a.start_velocity;
  a.radius = 0.1;
  AgentSpec b = a;
  b.id = 2;
  b.start_position = Vec2(1.5, 0.3);
  b.goal_position = Vec2(1.5, 2.7);
  b.start_velocity = Vec2(0, 2.4 / duration);
  b.goal_velocity = b.start_velocity;
  cfg.agents = {a, b};
  return cfg;
}

ViolationSegment fake_violation() {
  ViolationSegment v;
  v.agent = 1;
  v.other = 2;
  v.arc_begin = 0.8;
  v.arc_end = 1.4;
  v.other_arc_begin = 0.7;
  v.other_arc_end = 1.3;
  v.min_distance = 0.04;
  return v;
}

}  // namespace

TEST_CASE("trajectory CSV round-trips bit-exactly") {
  Trajectory first{7, 0.1, {}};
  Trajectory second{3, 1.0 / 3.0, {}};
  const double awkward[] = {0.1,  1.0 / 3.0, std::sqrt(2.0), -1e-17,
                            1e300, -0.0,      5.0e-301,       2.5};
  for (int k = 0; k < 4; ++k) {
    StateVariable s;
    s.position = Vec2(awkward[2 * k], awkward[2 * k + 1]);
    s.velocity = Vec2(awkward[7 - 2 * k], -awkward[k]);
    first.states.push_back(s);
    s.position *= -1.75;
    s.velocity *= 3.0;
    second.states.push_back(s);
  }

  const std::string text = trajectories_csv({first, second});
  CHECK(text.substr(0, text.find('\n')) == "agent_id,step,t,x,y,vx,vy");
  CHECK(count_substr(text, "\n") == 9);  // header + 2*4 rows, LF-terminated

  const std::vector<Trajectory> parsed = parse_trajectories_csv(text);
  REQUIRE(parsed.size() == 2);
  const Trajectory* inputs[] = {&first, &second};
  for (int i = 0; i < 2; ++i) {
    CHECK(parsed[i].agent_id == inputs[i]->agent_id);
    CHECK(parsed[i].dt == inputs[i]->dt);
    REQUIRE(parsed[i].steps() == inputs[i]->steps());
    for (int k = 0; k < 4; ++k) {
      CHECK(parsed[i].states[k].position.x() == inputs[i]->states[k].position.x());
      CHECK(parsed[i].states[k].position.y() == inputs[i]->states[k].position.y());
      CHECK(parsed[i].states[k].velocity.x() == inputs[i]->states[k].velocity.x());
      CHECK(parsed[i].states[k].velocity.y() == inputs[i]->states[k].velocity.y());
    }
  }
}

TEST_CASE("trajectory CSV parser rejects malformed input") {
  const std::string good =
      "agent_id,step,t,x,y,vx,vy\n"
      "1,0,0,0,0,1,0\n"
      "1,1,0.5,0.5,0,1,0\n";
  CHECK(parse_trajectories_csv(good).size() == 1);

  CHECK_THROWS_AS(parse_trajectories_csv("x,y\n1,2\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_trajectories_csv("agent_id,step,t,x,y,vx,vy\n1,0,0,0,0,1\n"),
      ConfigError);  // six fields
  CHECK_THROWS_AS(
      parse_trajectories_csv("agent_id,step,t,x,y,vx,vy\n1,0,zero,0,0,1,0\n"),
      ConfigError);  // bad number
  CHECK_THROWS_AS(parse_trajectories_csv("agent_id,step,t,x,y,vx,vy\n"
                                         "1,0,0,0,0,1,0\n"
                                         "1,2,1.0,1,0,1,0\n"),
                  ConfigError);  // skipped step index
  CHECK_THROWS_AS(parse_trajectories_csv("agent_id,step,t,x,y,vx,vy\n"
                                         "1,0,0,0,0,1,0\n"
                                         "1,1,0.5,0.5,0,1,0\n"
                                         "2,0,0,0,1,1,0\n"
                                         "2,1,0.5,0.5,1,1,0\n"
                                         "1,2,1.0,1,0,1,0\n"),
                  ConfigError);  // agent 1 rows split around agent 2
}

TEST_CASE("metrics JSON carries the full report") {
  ScenarioConfig cfg = crossing_config();
  const RunResult result = run_scenario(cfg);
  REQUIRE(result.trajectories.size() == 2);

  SUBCASE("joint-mode document shape") {
    const json doc = json::parse(metrics_json(cfg, result, {fake_violation()}));
    CHECK(doc["mode"] == "joint");
    CHECK(doc["converged"].is_boolean());
    CHECK(doc["solver"]["iterations"].get<int>() >= 1);
    CHECK(doc["solver"]["final_cost"].get<double>() == result.solve.final_cost);
    CHECK(doc["solver"]["cost_history"].is_array());
    CHECK_FALSE(doc.contains("rounds"));

    const auto& dist = doc["min_distance"];
    CHECK(dist["agent_ids"] == json::array({1, 2}));
    for (const char* key :
         {"geometric_surface", "synchronized_surface", "synchronized_center"}) {
      REQUIRE(dist[key].size() == 2);
      REQUIRE(dist[key][0].size() == 2);
      CHECK(dist[key][0][0].get<double>() == 0.0);
      CHECK(dist[key][0][1].get<double>() == dist[key][1][0].get<double>());
    }
    CHECK(dist["geometric_surface"][0][1].get<double>() ==
          result.report.min_distance_geometric.values(0, 1));
    // surface gaps are clamped at contact, so the center distance sits
    // between the surface value and surface plus both radii
    const double surface = dist["synchronized_surface"][0][1].get<double>();
    const double center = dist["synchronized_center"][0][1].get<double>();
    CHECK(center >= surface - 1e-15);
    CHECK(center <= surface + 0.2 + 1e-12);

    CHECK(doc["violation_threshold"].get<double>() == cfg.trust.eps_proximity);
    REQUIRE(doc["violations"].size() == 1);
    CHECK(doc["violations"][0]["agent"] == 1);
    CHECK(doc["violations"][0]["other"] == 2);
    CHECK(doc["violations"][0]["arc_begin"].get<double>() == 0.8);
    CHECK(doc["violations"][0]["min_distance"].get<double>() == 0.04);

    const auto& inc = doc["inconsistency"];
    CHECK(inc["fraction"].get<double>() >= 0.0);
    CHECK(inc["fraction"].get<double>() <= 1.0);
    CHECK(inc["eligible_samples"].is_number_integer());

    CHECK(doc["trust_scores"].contains("1"));
    CHECK(doc["trust_scores"].contains("2"));
    CHECK(doc["transparency"].contains("discrepancy"));
    CHECK(doc["transparency"].contains("inflated_eps"));
  }

  SUBCASE("decentralized runs also record rounds") {
    ScenarioConfig dec_cfg = cfg;
    dec_cfg.mode = RunMode::kDecentralized;
    const RunResult dec = run_scenario(dec_cfg);
    const json doc = json::parse(metrics_json(dec_cfg, dec, {}));
    CHECK(doc["mode"] == "decentralized");
    CHECK(doc["rounds"].get<int>() == dec.rounds);
    CHECK(doc["round_costs"].size() == static_cast<std::size_t>(dec.rounds));
    CHECK(doc["violations"].empty());
  }

  SUBCASE("trust report summary") {
    const json doc = json::parse(trust_report_json(result));
    CHECK(doc.contains("transparency"));
    CHECK(doc["trust_scores"].size() == 2);
    CHECK(doc["min_distance"]["agent_ids"] == json::array({1, 2}));
    CHECK(doc["min_distance"]["synchronized_surface"][0][1].get<double>() ==
          result.report.min_distance_synchronized.values(0, 1));
    CHECK(doc["inconsistency_fraction"].get<double>() ==
          result.report.inconsistency.fraction);
  }
}

TEST_CASE("SVG plot draws the world, the paths, and the violations") {
  ScenarioConfig cfg = crossing_config();
  const RunResult result = run_scenario(cfg);

  const std::string plain = plot_svg(cfg, result, {});
  CHECK(plain.rfind("<svg", 0) == 0);
  CHECK(plain.find("</svg>") != std::string::npos);
  CHECK(count_substr(plain, "<polyline") == 2);       // one path per agent
  CHECK(count_substr(plain, "<circle") == 4);         // start + goal markers
  CHECK(plain.find("#1f77b4") != std::string::npos);  // per-agent colors
  CHECK(plain.find("#d62728") != std::string::npos);
  CHECK(plain.find("#555555") != std::string::npos);  // occupied cells
  CHECK(plain.find("#000000") == std::string::npos);

  const std::string marked = plot_svg(cfg, result, {fake_violation()});
  CHECK(count_substr(marked, "<polyline") == 3);
  CHECK(marked.find("stroke=\"#000000\"") != std::string::npos);

  SUBCASE("an empty world draws no obstacle cells") {
    ScenarioConfig open = cfg;
    open.world.cells.assign(900, 0);
    const std::string svg = plot_svg(open, result, {});
    CHECK(svg.find("#555555") == std::string::npos);
  }
}

TEST_CASE("atomic file writes land whole or not at all") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "trustfg_io_test";
  fs::create_directories(dir);
  const fs::path target = dir / "out.csv";

  const std::string content = "agent_id,step,t,x,y,vx,vy\n1,0,0,0,0,1,0\n";
  write_file_atomic(target.string(), content);
  {
    std::ifstream in(target, std::ios::binary);
    std::string got((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    CHECK(got == content);
  }
  CHECK_FALSE(fs::exists(target.string() + ".tmp"));

  // overwriting replaces the old content completely
  write_file_atomic(target.string(), "shorter\n");
  {
    std::ifstream in(target, std::ios::binary);
    std::string got((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    CHECK(got == "shorter\n");
  }

  const fs::path bad = dir / "no_such_subdir" / "out.csv";
  CHECK_THROWS_AS(write_file_atomic(bad.string(), "x"), IoError);
  CHECK_FALSE(fs::exists(bad));

  fs::remove_all(dir);
}

TEST_CASE("run modes have stable names") {
  CHECK(std::string(run_mode_name(RunMode::kJoint)) == "joint");
  CHECK(std::string(run_mode_name(RunMode::kDecentralized)) == "decentralized");
}
