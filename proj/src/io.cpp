#include "trustfg/io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "trustfg/errors.hpp"

namespace trustfg {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

ordered_json matrix_json(const MinDistanceMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) row.push_back(m.values(i, j));
    rows.push_back(row);
  }
  return rows;
}

ordered_json ids_json(const std::vector<int>& ids) {
  ordered_json out = ordered_json::array();
  for (int id : ids) out.push_back(id);
  return out;
}

ordered_json transparency_json(const TransparencyReport& trep) {
  ordered_json out;
  ordered_json delta;
  for (const auto& [id, d] : trep.discrepancy) delta[std::to_string(id)] = d;
  out["discrepancy"] = delta;
  ordered_json eps = ordered_json::array();
  for (const auto& [pair, value] : trep.inflated_eps) {
    eps.push_back({{"agents", {pair.first, pair.second}}, {"eps", value}});
  }
  out["inflated_eps"] = eps;
  return out;
}

ordered_json scores_json(const std::map<int, double>& scores) {
  ordered_json out;
  for (const auto& [id, s] : scores) out[std::to_string(id)] = s;
  return out;
}

ordered_json inconsistency_json(const InconsistencyResult& r) {
  ordered_json out;
  out["fraction"] = r.fraction;
  out["eligible_samples"] = r.eligible_samples;
  out["exceeding_samples"] = r.exceeding_samples;
  out["no_eligible_samples"] = r.no_eligible_samples;
  return out;
}

}  // namespace

const char* run_mode_name(RunMode mode) {
  return mode == RunMode::kJoint ? "joint" : "decentralized";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("short write: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move " + tmp + " into place: " + ec.message());
  }
}

std::string trajectories_csv(const std::vector<Trajectory>& trajs) {
  std::ostringstream out;
  out << "agent_id,step,t,x,y,vx,vy\n";
  for (const auto& t : trajs) {
    t.validate();
    for (int k = 0; k < t.steps(); ++k) {
      const StateVariable& s = t.states[k];
      out << t.agent_id << ',' << k << ',' << g17(k * t.dt) << ',' << g17(s.position.x())
          << ',' << g17(s.position.y()) << ',' << g17(s.velocity.x()) << ','
          << g17(s.velocity.y()) << '\n';
    }
  }
  return out.str();
}

std::vector<Trajectory> parse_trajectories_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "agent_id,step,t,x,y,vx,vy") {
    throw ConfigError("trajectories.csv: missing or wrong header row");
  }
  std::vector<Trajectory> trajs;
  std::vector<double> step_times;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::array<std::string, 7> fields;
    size_t start = 0;
    for (int f = 0; f < 7; ++f) {
      const size_t comma = line.find(',', start);
      const bool last = f == 6;
      if (last != (comma == std::string::npos)) {
        throw ConfigError("trajectories.csv row " + std::to_string(row) +
                          ": expected 7 comma-separated fields");
      }
      fields[f] = line.substr(start, last ? std::string::npos : comma - start);
      start = comma + 1;
    }
    auto as_double = [&](const std::string& s) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size() || s.empty()) {
        throw ConfigError("trajectories.csv row " + std::to_string(row) +
                          ": bad number \"" + s + "\"");
      }
      return v;
    };
    auto as_int = [&](const std::string& s) {
      char* end = nullptr;
      const long v = std::strtol(s.c_str(), &end, 10);
      if (end != s.c_str() + s.size() || s.empty()) {
        throw ConfigError("trajectories.csv row " + std::to_string(row) +
                          ": bad integer \"" + s + "\"");
      }
      return static_cast<int>(v);
    };
    const int agent_id = as_int(fields[0]);
    const int step = as_int(fields[1]);
    const double t = as_double(fields[2]);

    if (trajs.empty() || trajs.back().agent_id != agent_id) {
      for (const auto& existing : trajs) {
        if (existing.agent_id == agent_id) {
          throw ConfigError("trajectories.csv row " + std::to_string(row) +
                            ": agent " + std::to_string(agent_id) +
                            " rows are not contiguous");
        }
      }
      trajs.push_back(Trajectory{agent_id, 1.0, {}});
      step_times.clear();
    }
    Trajectory& traj = trajs.back();
    if (step != traj.steps()) {
      throw ConfigError("trajectories.csv row " + std::to_string(row) +
                        ": expected step " + std::to_string(traj.steps()));
    }
    step_times.push_back(t);
    if (step == 1) traj.dt = t;  // t(k) is written as k*dt, so t(1) is dt itself
    StateVariable s;
    s.position = Vec2(as_double(fields[3]), as_double(fields[4]));
    s.velocity = Vec2(as_double(fields[5]), as_double(fields[6]));
    traj.states.push_back(s);
  }
  for (const auto& t : trajs) t.validate();
  return trajs;
}

std::string metrics_json(const ScenarioConfig& cfg, const RunResult& result,
                         const std::vector<ViolationSegment>& violations) {
  ordered_json out;
  out["mode"] = run_mode_name(result.mode);
  out["converged"] = result.converged;

  ordered_json solver;
  solver["iterations"] = result.solve.iterations;
  solver["final_cost"] = result.solve.final_cost;
  solver["final_gradient_norm"] = result.solve.final_gradient_norm;
  solver["cost_history"] = result.solve.cost_history;
  out["solver"] = solver;
  if (result.mode == RunMode::kDecentralized) {
    out["rounds"] = result.rounds;
    out["round_costs"] = result.round_costs;
  }

  ordered_json dist;
  dist["agent_ids"] = ids_json(result.report.min_distance_geometric.agent_ids);
  dist["geometric_surface"] = matrix_json(result.report.min_distance_geometric);
  dist["synchronized_surface"] = matrix_json(result.report.min_distance_synchronized);
  dist["synchronized_center"] = matrix_json(result.report.min_distance_center);
  out["min_distance"] = dist;

  out["violation_threshold"] = cfg.trust.eps_proximity;
  ordered_json viol = ordered_json::array();
  for (const auto& v : violations) {
    ordered_json seg;
    seg["agent"] = v.agent;
    seg["other"] = v.other;
    seg["arc_begin"] = v.arc_begin;
    seg["arc_end"] = v.arc_end;
    seg["other_arc_begin"] = v.other_arc_begin;
    seg["other_arc_end"] = v.other_arc_end;
    seg["min_distance"] = v.min_distance;
    viol.push_back(seg);
  }
  out["violations"] = viol;

  out["inconsistency"] = inconsistency_json(result.report.inconsistency);
  out["trust_scores"] = scores_json(result.report.trust_scores);
  out["transparency"] = transparency_json(result.report.transparency);
  return out.dump(2) + "\n";
}

std::string trust_report_json(const RunResult& result) {
  ordered_json out;
  out["transparency"] = transparency_json(result.report.transparency);
  out["trust_scores"] = scores_json(result.report.trust_scores);
  ordered_json dist;
  dist["agent_ids"] = ids_json(result.report.min_distance_synchronized.agent_ids);
  dist["synchronized_surface"] = matrix_json(result.report.min_distance_synchronized);
  dist["synchronized_center"] = matrix_json(result.report.min_distance_center);
  out["min_distance"] = dist;
  out["inconsistency_fraction"] = result.report.inconsistency.fraction;
  return out.dump(2) + "\n";
}

std::string plot_svg(const ScenarioConfig& cfg, const RunResult& result,
                     const std::vector<ViolationSegment>& violations) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr double kCanvas = 800.0;
  constexpr double kMargin = 24.0;

  const Vec2 lo = cfg.world.origin;
  const Vec2 hi = lo + Vec2(cfg.world.width * cfg.world.cell_size,
                            cfg.world.height * cfg.world.cell_size);
  const double span = std::max(hi.x() - lo.x(), hi.y() - lo.y());
  const double scale = (kCanvas - 2.0 * kMargin) / span;
  auto sx = [&](double x) { return kMargin + (x - lo.x()) * scale; };
  auto sy = [&](double y) { return kMargin + (hi.y() - y) * scale; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas
      << "\" height=\"" << kCanvas << "\" viewBox=\"0 0 " << kCanvas << " " << kCanvas
      << "\">\n";
  out << "<rect x=\"" << px(sx(lo.x())) << "\" y=\"" << px(sy(hi.y())) << "\" width=\""
      << px((hi.x() - lo.x()) * scale) << "\" height=\"" << px((hi.y() - lo.y()) * scale)
      << "\" fill=\"#fcfcfa\" stroke=\"#888\"/>\n";

  // occupied cells, merged into horizontal runs to keep the file small
  for (int iy = 0; iy < cfg.world.height; ++iy) {
    int ix = 0;
    while (ix < cfg.world.width) {
      if (!cfg.world.occupied(ix, iy)) {
        ++ix;
        continue;
      }
      int end = ix;
      while (end + 1 < cfg.world.width && cfg.world.occupied(end + 1, iy)) ++end;
      const double x0 = lo.x() + ix * cfg.world.cell_size;
      const double y1 = lo.y() + (iy + 1) * cfg.world.cell_size;
      out << "<rect x=\"" << px(sx(x0)) << "\" y=\"" << px(sy(y1)) << "\" width=\""
          << px((end - ix + 1) * cfg.world.cell_size * scale) << "\" height=\""
          << px(cfg.world.cell_size * scale) << "\" fill=\"#555555\"/>\n";
      ix = end + 1;
    }
  }

  const auto radii = cfg.radii();
  for (size_t i = 0; i < result.trajectories.size(); ++i) {
    const Trajectory& t = result.trajectories[i];
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"3\" stroke-linecap=\"round\" stroke-linejoin=\"round\" points=\"";
    for (const auto& s : t.states) {
      out << px(sx(s.position.x())) << ',' << px(sy(s.position.y())) << ' ';
    }
    out << "\"/>\n";

    const double r = radii.at(t.agent_id) * scale;
    const Vec2 start = t.states.front().position;
    const Vec2 goal = t.states.back().position;
    out << "<circle cx=\"" << px(sx(start.x())) << "\" cy=\"" << px(sy(start.y()))
        << "\" r=\"" << px(r) << "\" fill=\"" << color << "\" fill-opacity=\"0.8\"/>\n";
    out << "<circle cx=\"" << px(sx(goal.x())) << "\" cy=\"" << px(sy(goal.y()))
        << "\" r=\"" << px(r) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << px(sx(start.x()) + 8) << "\" y=\"" << px(sy(start.y()) - 8)
        << "\" font-family=\"sans-serif\" font-size=\"14\" fill=\"" << color << "\">"
        << t.agent_id << "</text>\n";
  }

  // violating stretches, black on top of the colored paths
  for (const auto& v : violations) {
    const Trajectory* t = nullptr;
    for (const auto& cand : result.trajectories) {
      if (cand.agent_id == v.agent) t = &cand;
    }
    if (t == nullptr) continue;
    const auto line = positions_of(*t);
    const double step = std::max(1e-3, (v.arc_end - v.arc_begin) / 64.0);
    out << "<polyline fill=\"none\" stroke=\"#000000\" stroke-width=\"5\" "
           "stroke-linecap=\"round\" points=\"";
    for (double s = v.arc_begin; s < v.arc_end + 0.5 * step; s += step) {
      const Vec2 p = polyline_point_at_arc(line, std::min(s, v.arc_end));
      out << px(sx(p.x())) << ',' << px(sy(p.y())) << ' ';
    }
    out << "\"/>\n";
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace trustfg
