#include "trustfg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "trustfg/errors.hpp"

namespace trustfg {
namespace {

constexpr double kArcStep = 1e-3;       // marching resolution along polylines
constexpr double kTinyLength = 1e-15;   // squared-length cutoff for degenerate segments

double cross2(const Vec2& u, const Vec2& v) {
  return u.x() * v.y() - u.y() * v.x();
}

double pair_radius(const std::map<int, double>& radii, int agent_id) {
  auto it = radii.find(agent_id);
  if (it == radii.end()) {
    throw ParameterError("no radius for agent " + std::to_string(agent_id));
  }
  if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
    throw ParameterError("radius for agent " + std::to_string(agent_id) +
                         " must be non-negative");
  }
  return it->second;
}

std::vector<const Trajectory*> by_agent_id(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw ParameterError("no trajectories given");
  std::vector<const Trajectory*> out;
  out.reserve(trajs.size());
  for (const auto& t : trajs) {
    t.validate();
    out.push_back(&t);
  }
  std::sort(out.begin(), out.end(), [](const Trajectory* a, const Trajectory* b) {
    return a->agent_id < b->agent_id;
  });
  for (size_t i = 0; i + 1 < out.size(); ++i) {
    if (out[i]->agent_id == out[i + 1]->agent_id) {
      throw ParameterError("duplicate agent id " + std::to_string(out[i]->agent_id));
    }
  }
  return out;
}

void require_aligned(const std::vector<const Trajectory*>& trajs) {
  for (const auto* t : trajs) {
    if (t->states.size() != trajs.front()->states.size()) {
      throw AlignmentError("trajectories disagree on step count");
    }
    if (std::abs(t->dt - trajs.front()->dt) > 1e-12) {
      throw AlignmentError("trajectories disagree on dt");
    }
  }
}

// Polyline with a cumulative arc-length table.
struct ArcPolyline {
  std::vector<Vec2> pts;
  std::vector<double> cum;
  double total = 0.0;

  explicit ArcPolyline(std::vector<Vec2> p) : pts(std::move(p)) {
    cum.resize(pts.size(), 0.0);
    for (size_t i = 1; i < pts.size(); ++i) {
      cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
    }
    total = cum.empty() ? 0.0 : cum.back();
  }

  Vec2 at_arc(double s) const {
    s = std::clamp(s, 0.0, total);
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    size_t i = it == cum.begin() ? 0 : static_cast<size_t>(it - cum.begin() - 1);
    if (i + 1 >= pts.size()) return pts.back();
    const double seg = cum[i + 1] - cum[i];
    if (seg < 1e-300) return pts[i];
    const double t = (s - cum[i]) / seg;
    return pts[i] + t * (pts[i + 1] - pts[i]);
  }

  // Distance from p to the polyline plus the arc position of the closest point.
  std::pair<double, double> closest(const Vec2& p) const {
    double best = (p - pts.front()).norm();
    double best_arc = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      const Vec2 d = pts[i + 1] - pts[i];
      const double len2 = d.squaredNorm();
      double t = 0.0;
      if (len2 > kTinyLength) t = std::clamp((p - pts[i]).dot(d) / len2, 0.0, 1.0);
      const Vec2 q = pts[i] + t * d;
      const double dist = (p - q).norm();
      if (dist < best) {
        best = dist;
        best_arc = cum[i] + t * std::sqrt(len2);
      }
    }
    return {best, best_arc};
  }
};

double polyline_pair_min_distance(const std::vector<Vec2>& a,
                                  const std::vector<Vec2>& b) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < a.size() || (a.size() == 1 && i == 0); ++i) {
    const Vec2& a0 = a[i];
    const Vec2& a1 = a.size() == 1 ? a[i] : a[i + 1];
    for (size_t j = 0; j + 1 < b.size() || (b.size() == 1 && j == 0); ++j) {
      const Vec2& b0 = b[j];
      const Vec2& b1 = b.size() == 1 ? b[j] : b[j + 1];
      best = std::min(best, segment_segment_distance(a0, a1, b0, b1));
      if (b.size() == 1) break;
    }
    if (a.size() == 1) break;
  }
  return best;
}

MinDistanceMatrix matrix_shell(const std::vector<const Trajectory*>& ordered) {
  MinDistanceMatrix out;
  out.agent_ids.reserve(ordered.size());
  for (const auto* t : ordered) out.agent_ids.push_back(t->agent_id);
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ordered.size()),
                                     static_cast<Eigen::Index>(ordered.size()));
  return out;
}

}  // namespace

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 < kTinyLength) return (p - a).norm();
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

double segment_segment_distance(const Vec2& a0, const Vec2& a1,
                                const Vec2& b0, const Vec2& b1) {
  const double d1 = cross2(a1 - a0, b0 - a0);
  const double d2 = cross2(a1 - a0, b1 - a0);
  const double d3 = cross2(b1 - b0, a0 - b0);
  const double d4 = cross2(b1 - b0, a1 - b0);
  if (((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
      ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))) {
    return 0.0;  // proper crossing
  }
  return std::min(std::min(point_segment_distance(a0, b0, b1),
                           point_segment_distance(a1, b0, b1)),
                  std::min(point_segment_distance(b0, a0, a1),
                           point_segment_distance(b1, a0, a1)));
}

double MinDistanceMatrix::at(int agent_a, int agent_b) const {
  auto index = [this](int id) {
    auto it = std::find(agent_ids.begin(), agent_ids.end(), id);
    if (it == agent_ids.end()) {
      throw ParameterError("agent " + std::to_string(id) + " not in matrix");
    }
    return static_cast<Eigen::Index>(it - agent_ids.begin());
  };
  return values(index(agent_a), index(agent_b));
}

double MinDistanceMatrix::global_min() const {
  double best = 0.0;
  bool any = false;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < values.cols(); ++j) {
      if (!any || values(i, j) < best) best = values(i, j);
      any = true;
    }
  }
  return any ? best : 0.0;
}

MinDistanceMatrix min_distance_matrix(const std::vector<Trajectory>& trajs,
                                      const std::map<int, double>& radii) {
  const auto ordered = by_agent_id(trajs);
  MinDistanceMatrix out = matrix_shell(ordered);
  std::vector<std::vector<Vec2>> lines;
  lines.reserve(ordered.size());
  for (const auto* t : ordered) lines.push_back(positions_of(*t));
  for (size_t i = 0; i < ordered.size(); ++i) {
    for (size_t j = i + 1; j < ordered.size(); ++j) {
      const double center = polyline_pair_min_distance(lines[i], lines[j]);
      const double surface = center - pair_radius(radii, ordered[i]->agent_id) -
                             pair_radius(radii, ordered[j]->agent_id);
      const double v = std::max(0.0, surface);
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return out;
}

MinDistanceMatrix synchronized_min_distance_matrix(
    const std::vector<Trajectory>& trajs,
    const std::map<int, double>& radii,
    bool surface) {
  const auto ordered = by_agent_id(trajs);
  require_aligned(ordered);
  MinDistanceMatrix out = matrix_shell(ordered);
  const size_t steps = ordered.front()->states.size();
  for (size_t i = 0; i < ordered.size(); ++i) {
    for (size_t j = i + 1; j < ordered.size(); ++j) {
      const Trajectory& a = *ordered[i];
      const Trajectory& b = *ordered[j];
      double best = (a.states[0].position - b.states[0].position).norm();
      for (size_t k = 0; k + 1 < steps; ++k) {
        const Vec2 r0 = a.states[k].position - b.states[k].position;
        const Vec2 r1 = a.states[k + 1].position - b.states[k + 1].position;
        const Vec2 e = r1 - r0;
        const double len2 = e.squaredNorm();
        double t = 0.0;
        if (len2 > kTinyLength) t = std::clamp(-r0.dot(e) / len2, 0.0, 1.0);
        best = std::min(best, (r0 + t * e).norm());
        best = std::min(best, r1.norm());
      }
      double v = best;
      if (surface) {
        v -= pair_radius(radii, a.agent_id) + pair_radius(radii, b.agent_id);
        v = std::max(0.0, v);
      }
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return out;
}

Vec2 polyline_point_at_arc(const std::vector<Vec2>& polyline, double arc) {
  if (polyline.empty()) throw ParameterError("empty polyline");
  return ArcPolyline(polyline).at_arc(arc);
}

double polyline_length(const std::vector<Vec2>& polyline) {
  if (polyline.empty()) throw ParameterError("empty polyline");
  return ArcPolyline(polyline).total;
}

std::vector<ViolationSegment> proximity_violations(
    const std::vector<Trajectory>& trajs,
    const std::map<int, double>& radii,
    double threshold) {
  if (!(threshold > 0.0)) throw ParameterError("violation threshold must be positive");
  const auto ordered = by_agent_id(trajs);
  std::vector<ArcPolyline> lines;
  lines.reserve(ordered.size());
  for (const auto* t : ordered) lines.emplace_back(positions_of(*t));

  std::vector<ViolationSegment> out;
  for (size_t i = 0; i < ordered.size(); ++i) {
    for (size_t j = 0; j < ordered.size(); ++j) {
      if (i == j) continue;
      const ArcPolyline& line_a = lines[i];
      const ArcPolyline& line_b = lines[j];
      const double rsum = pair_radius(radii, ordered[i]->agent_id) +
                          pair_radius(radii, ordered[j]->agent_id);

      // march along a's polyline; surface gap to b's polyline
      const long n_steps = std::max<long>(1, static_cast<long>(std::ceil(line_a.total / kArcStep)));
      std::vector<double> arcs(n_steps + 1);
      for (long s = 0; s <= n_steps; ++s) {
        arcs[s] = std::min(line_a.total, s * kArcStep);
      }
      arcs.back() = line_a.total;

      auto surface_gap = [&](double s) {
        return line_b.closest(line_a.at_arc(s)).first - rsum;
      };

      std::vector<char> under(arcs.size());
      std::vector<double> gaps(arcs.size());
      std::vector<double> other_arc(arcs.size());
      for (size_t s = 0; s < arcs.size(); ++s) {
        auto [dist, barc] = line_b.closest(line_a.at_arc(arcs[s]));
        gaps[s] = dist - rsum;
        other_arc[s] = barc;
        under[s] = gaps[s] < threshold ? 1 : 0;
      }

      size_t s = 0;
      while (s < arcs.size()) {
        if (!under[s]) { ++s; continue; }
        size_t e = s;
        while (e + 1 < arcs.size() && under[e + 1]) ++e;

        ViolationSegment seg;
        seg.agent = ordered[i]->agent_id;
        seg.other = ordered[j]->agent_id;
        seg.arc_begin = arcs[s];
        seg.arc_end = arcs[e];
        seg.min_distance = gaps[s];
        seg.other_arc_begin = other_arc[s];
        seg.other_arc_end = other_arc[s];
        for (size_t k = s; k <= e; ++k) {
          seg.min_distance = std::min(seg.min_distance, gaps[k]);
          seg.other_arc_begin = std::min(seg.other_arc_begin, other_arc[k]);
          seg.other_arc_end = std::max(seg.other_arc_end, other_arc[k]);
        }
        // sharpen the entry/exit points of the run by bisection
        if (s > 0) {
          double lo = arcs[s - 1], hi = arcs[s];
          for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            (surface_gap(mid) < threshold ? hi : lo) = mid;
          }
          seg.arc_begin = hi;
        }
        if (e + 1 < arcs.size()) {
          double lo = arcs[e], hi = arcs[e + 1];
          for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            (surface_gap(mid) < threshold ? lo : hi) = mid;
          }
          seg.arc_end = lo;
        }
        out.push_back(seg);
        s = e + 1;
      }
    }
  }
  return out;
}

InconsistencyResult inconsistency_metric(const std::vector<Trajectory>& trajs,
                                         double accel_tol,
                                         double eligibility_range) {
  if (!(accel_tol > 0.0)) throw ParameterError("accel_tol must be positive");
  if (!(eligibility_range > 0.0)) throw ParameterError("eligibility_range must be positive");
  const auto ordered = by_agent_id(trajs);
  require_aligned(ordered);

  InconsistencyResult res;
  const size_t steps = ordered.front()->states.size();
  const double dt = ordered.front()->dt;
  for (size_t i = 0; i < ordered.size(); ++i) {
    for (size_t j = i + 1; j < ordered.size(); ++j) {
      const Trajectory& a = *ordered[i];
      const Trajectory& b = *ordered[j];
      for (size_t k = 0; k + 1 < steps; ++k) {
        const double d = (a.states[k].position - b.states[k].position).norm();
        if (d >= eligibility_range) continue;
        ++res.eligible_samples;
        const Vec2 accel_a = (a.states[k + 1].velocity - a.states[k].velocity) / dt;
        const Vec2 accel_b = (b.states[k + 1].velocity - b.states[k].velocity) / dt;
        if ((accel_a - accel_b).norm() > accel_tol) ++res.exceeding_samples;
      }
    }
  }
  res.no_eligible_samples = res.eligible_samples == 0;
  res.fraction = res.no_eligible_samples
                     ? 0.0
                     : static_cast<double>(res.exceeding_samples) /
                           static_cast<double>(res.eligible_samples);
  return res;
}

}  // namespace trustfg
