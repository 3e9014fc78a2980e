#pragma once

#include <map>
#include <vector>

#include "trustfg/gp_trajectory.hpp"
#include "trustfg/types.hpp"

namespace trustfg {

// Exact 2D distances between points and segments.
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
double segment_segment_distance(const Vec2& a0, const Vec2& a1,
                                const Vec2& b0, const Vec2& b1);

// Pairwise minimum distances between agents. Row/column order follows
// agent_ids (sorted ascending); symmetric with zero diagonal.
struct MinDistanceMatrix {
  std::vector<int> agent_ids;
  Eigen::MatrixXd values;

  double at(int agent_a, int agent_b) const;
  double global_min() const;  // minimum off-diagonal entry; 0 if < 2 agents
};

// Geometric: exact minimum over all segment pairs of the two position
// polylines, minus both radii, clamped at zero. Ignores timing entirely.
MinDistanceMatrix min_distance_matrix(const std::vector<Trajectory>& trajs,
                                      const std::map<int, double>& radii);

// Time-synchronized: both agents move linearly across each step, so the
// squared pair distance is quadratic in time within a step and its minimum
// is exact. surface=true subtracts both radii (clamped at zero);
// surface=false reports center-to-center distances.
MinDistanceMatrix synchronized_min_distance_matrix(
    const std::vector<Trajectory>& trajs,
    const std::map<int, double>& radii,
    bool surface = true);

// A maximal stretch of one agent's polyline that passes within `threshold`
// (surface distance) of another agent's polyline. Arc positions are metres
// along the respective polylines; other_arc_* spans the closest points
// attained on the other polyline.
struct ViolationSegment {
  int agent = 0;
  int other = 0;
  double arc_begin = 0.0;
  double arc_end = 0.0;
  double other_arc_begin = 0.0;
  double other_arc_end = 0.0;
  double min_distance = 0.0;
};

std::vector<ViolationSegment> proximity_violations(
    const std::vector<Trajectory>& trajs,
    const std::map<int, double>& radii,
    double threshold);

// Point on a polyline at a given arc length (clamped to [0, total length]).
Vec2 polyline_point_at_arc(const std::vector<Vec2>& polyline, double arc);
double polyline_length(const std::vector<Vec2>& polyline);

// Share of (pair, step) samples with nearby agents whose acceleration
// difference exceeds accel_tol. Samples where the pair is farther apart than
// eligibility_range are excluded; with no eligible samples the fraction is 0
// and no_eligible_samples is set.
struct InconsistencyResult {
  double fraction = 0.0;
  long eligible_samples = 0;
  long exceeding_samples = 0;
  bool no_eligible_samples = true;
};

InconsistencyResult inconsistency_metric(const std::vector<Trajectory>& trajs,
                                         double accel_tol = 0.5,
                                         double eligibility_range = 1.0);

}  // namespace trustfg
