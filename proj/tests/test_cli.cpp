// Drives the installed command-line binary end to end through std::system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + TRUSTFG_SIM_BIN + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string scenario_path() {
  return std::string(TRUSTFG_SCENARIO_DIR) + "/intersection.json";
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "trustfg_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

double matrix_min_offdiag(const json& matrix) {
  double best = 1e300;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (std::size_t j = 0; j < matrix.size(); ++j) {
      if (i != j) best = std::min(best, matrix[i][j].get<double>());
    }
  }
  return best;
}

}  // namespace

TEST_CASE("simulate writes the four output files and exits cleanly") {
  const fs::path dir = fresh_dir("simulate");
  const int code =
      run_cli("simulate --scenario \"" + scenario_path() + "\" --out " + dir.string());
  CHECK(code == 0);
  for (const char* name :
       {"trajectories.csv", "metrics.json", "trust_report.json", "plot.svg"}) {
    CHECK_MESSAGE(fs::exists(dir / name), name);
    CHECK(fs::file_size(dir / name) > 0);
  }

  const json metrics = json::parse(slurp(dir / "metrics.json"));
  CHECK(metrics["mode"] == "joint");
  CHECK(metrics["converged"] == true);
  CHECK(metrics["min_distance"]["agent_ids"].size() == 4);
  // the all-on run keeps everyone clear of the threshold
  CHECK(matrix_min_offdiag(metrics["min_distance"]["synchronized_surface"]) >= 0.095);

  fs::remove_all(dir);
}

TEST_CASE("a missing scenario file fails fast without partial output") {
  const fs::path dir = fresh_dir("missing");
  const int code = run_cli("simulate --scenario /no/such/file.json --out " + dir.string());
  CHECK(code == 1);
  CHECK_FALSE(fs::exists(dir / "trajectories.csv"));
  CHECK_FALSE(fs::exists(dir / "metrics.json"));
}

TEST_CASE("an unknown factor kind in --disable is a config error") {
  const fs::path dir = fresh_dir("badkind");
  const int code = run_cli("simulate --scenario \"" + scenario_path() + "\" --out " +
                           dir.string() + " --disable warp");
  CHECK(code == 1);
}

TEST_CASE("disabling the trust factors exposes a sub-threshold pair") {
  const fs::path dir = fresh_dir("ablated");
  const int code = run_cli("simulate --scenario \"" + scenario_path() + "\" --out " +
                           dir.string() +
                           " --disable proximity --disable consistency"
                           " --disable transparency");
  CHECK(code == 0);
  const json metrics = json::parse(slurp(dir / "metrics.json"));
  CHECK(matrix_min_offdiag(metrics["min_distance"]["synchronized_surface"]) < 0.1);
  fs::remove_all(dir);
}

TEST_CASE("identical invocations produce byte-identical reports") {
  const fs::path first = fresh_dir("repeat_a");
  const fs::path second = fresh_dir("repeat_b");
  const std::string args = "simulate --scenario \"" + scenario_path() + "\" --seed 42 --out ";
  CHECK(run_cli(args + first.string()) == 0);
  CHECK(run_cli(args + second.string()) == 0);
  CHECK(slurp(first / "metrics.json") == slurp(second / "metrics.json"));
  CHECK(slurp(first / "trajectories.csv") == slurp(second / "trajectories.csv"));
  fs::remove_all(first);
  fs::remove_all(second);
}

TEST_CASE("ablate compares the four toggle configurations") {
  const fs::path dir = fresh_dir("compare");
  const int code =
      run_cli("ablate --scenario \"" + scenario_path() + "\" --out " + dir.string());
  CHECK(code == 0);

  const json doc = json::parse(slurp(dir / "comparison.json"));
  for (const char* name : {"all_on", "proximity_off", "consistency_off",
                           "transparency_off"}) {
    REQUIRE_MESSAGE(doc["runs"].contains(name), name);
    CHECK(doc["runs"][name]["converged"] == true);
    // every named run also gets its own full output directory
    CHECK(fs::exists(dir / name / "trajectories.csv"));
    CHECK(fs::exists(dir / name / "plot.svg"));
  }

  const double all_on = doc["runs"]["all_on"]["global_min_surface"].get<double>();
  const double prox_off =
      doc["runs"]["proximity_off"]["global_min_surface"].get<double>();
  CHECK(all_on > prox_off);
  CHECK(doc["derived"]["proximity_gain"].get<double>() > 0.0);

  CHECK(doc["derived"]["transparency"]["distance_ratio"].get<double>() >= 1.3);
  CHECK(doc["derived"]["inconsistency_consistency_off"].get<double>() >=
        doc["derived"]["inconsistency_all_on"].get<double>());
  fs::remove_all(dir);
}
