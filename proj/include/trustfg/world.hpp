#pragma once

#include <memory>
#include <string>
#include <vector>

#include "trustfg/factor.hpp"
#include "trustfg/gp_trajectory.hpp"
#include "trustfg/types.hpp"

namespace trustfg {

/// Axis-aligned boolean occupancy map. Cell (ix, iy) spans
/// [origin + (ix, iy)*cell_size, origin + (ix+1, iy+1)*cell_size).
struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();
  double cell_size = 0.05;
  int width = 0;
  int height = 0;
  std::vector<uint8_t> cells;  // row-major, index iy * width + ix; 1 = obstacle

  bool occupied(int ix, int iy) const { return cells[iy * width + ix] != 0; }
  void set(int ix, int iy, bool value) { cells[iy * width + ix] = value ? 1 : 0; }
  Vec2 cell_center(int ix, int iy) const {
    return origin + Vec2((ix + 0.5) * cell_size, (iy + 0.5) * cell_size);
  }

  void validate() const {
    if (cell_size <= 0.0) throw ParameterError("grid cell_size must be positive");
    if (width <= 0 || height <= 0 || cells.size() != static_cast<size_t>(width) * height) {
      throw ParameterError("grid dimensions and cell storage do not match");
    }
  }
};

/// Plain-text grid format: header "width height cell_size origin_x origin_y",
/// then height rows of 0/1 characters, top row first.
OccupancyGrid load_occupancy_grid(const std::string& path);
void save_occupancy_grid(const OccupancyGrid& grid, const std::string& path);

struct SdfSample {
  double distance = 0.0;
  Vec2 gradient = Vec2::Zero();
  bool clamped = false;  // query point fell outside the grid and was pulled in
};

/// Signed distances to the nearest obstacle cell center, sampled at cell
/// centers and bilinearly interpolated in between. Negative inside obstacles
/// (distance to the nearest free cell center). Immutable once built.
class GridSDF {
 public:
  GridSDF(Vec2 origin, double cell_size, int width, int height,
          std::vector<double> distances, double clamp_margin);

  double value_at_cell(int ix, int iy) const { return distances_[iy * width_ + ix]; }
  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  const Vec2& origin() const { return origin_; }

  /// Bilinear distance and analytic gradient at p. Points outside the grid
  /// are clamped (flagged); beyond clamp_margin a BoundsError is thrown.
  SdfSample query(const Vec2& p) const;

 private:
  Vec2 origin_;
  double cell_size_;
  int width_;
  int height_;
  std::vector<double> distances_;
  double clamp_margin_;
};

/// Exact Euclidean distance transform of the occupancy grid (in meters).
/// Free cells hold the distance to the nearest obstacle cell center; occupied
/// cells the negated distance to the nearest free cell center. An all-free
/// grid holds the grid diagonal as a finite far-field sentinel.
GridSDF build_sdf(const OccupancyGrid& grid, double clamp_margin = 0.5);

struct RobotShape {
  double radius = 0.1;

  void validate() const {
    if (radius <= 0.0) throw ParameterError("robot radius must be positive");
  }
};

/// Hinge cost: -d + eps inside the safety margin, zero beyond it.
double obstacle_hinge(double d, double eps);

/// Unary obstacle-avoidance factor on one support state. The disc shape
/// reduces to its center: residual = hinge(sdf(p) - radius, eps).
class ObstacleFactor final : public Factor {
 public:
  ObstacleFactor(const VarKey& key, std::shared_ptr<const GridSDF> sdf, double radius,
                 double eps, double sigma);

  Eigen::VectorXd residual(const std::vector<StateVariable>& states) const override;
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>& states) const override;

 private:
  std::shared_ptr<const GridSDF> sdf_;
  double radius_;
  double eps_;
};

std::vector<FactorPtr> make_obstacle_factors(const Trajectory& traj,
                                             std::shared_ptr<const GridSDF> sdf,
                                             const RobotShape& shape, double eps,
                                             double sigma);

}  // namespace trustfg
