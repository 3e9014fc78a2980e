#pragma once

#include <string>
#include <vector>

#include "trustfg/metrics.hpp"
#include "trustfg/scenario.hpp"

namespace trustfg {

// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

// Columns: agent_id,step,t,x,y,vx,vy. 17 significant digits, so parsing the
// text reproduces every double bit-exactly. LF line endings.
std::string trajectories_csv(const std::vector<Trajectory>& trajs);
std::vector<Trajectory> parse_trajectories_csv(const std::string& text);

std::string metrics_json(const ScenarioConfig& cfg, const RunResult& result,
                         const std::vector<ViolationSegment>& violations);
std::string trust_report_json(const RunResult& result);

// Top-down view: occupied cells, agent paths (one color per agent), violating
// stretches overdrawn in black, start/goal markers.
std::string plot_svg(const ScenarioConfig& cfg, const RunResult& result,
                     const std::vector<ViolationSegment>& violations);

const char* run_mode_name(RunMode mode);

}  // namespace trustfg
