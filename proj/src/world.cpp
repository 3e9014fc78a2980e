#include "trustfg/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace trustfg {

OccupancyGrid load_occupancy_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file: " + path);

  OccupancyGrid grid;
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("grid file is empty: " + path);
  std::istringstream hs(header);
  if (!(hs >> grid.width >> grid.height >> grid.cell_size >> grid.origin.x() >>
        grid.origin.y())) {
    throw ConfigError("grid header must be: width height cell_size origin_x origin_y");
  }
  if (grid.width <= 0 || grid.height <= 0 || grid.cell_size <= 0.0) {
    throw ConfigError("grid header has non-positive dimensions");
  }

  grid.cells.assign(static_cast<size_t>(grid.width) * grid.height, 0);
  for (int row = 0; row < grid.height; ++row) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("grid file truncated: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != grid.width) {
      throw ConfigError("grid row " + std::to_string(row) + " has width " +
                        std::to_string(line.size()) + ", expected " +
                        std::to_string(grid.width));
    }
    const int iy = grid.height - 1 - row;  // file rows run top to bottom
    for (int ix = 0; ix < grid.width; ++ix) {
      if (line[ix] != '0' && line[ix] != '1') {
        throw ConfigError("grid cells must be 0 or 1");
      }
      grid.set(ix, iy, line[ix] == '1');
    }
  }
  grid.validate();
  return grid;
}

void save_occupancy_grid(const OccupancyGrid& grid, const std::string& path) {
  grid.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write grid file: " + path);
  out << grid.width << " " << grid.height << " " << grid.cell_size << " "
      << grid.origin.x() << " " << grid.origin.y() << "\n";
  for (int row = 0; row < grid.height; ++row) {
    const int iy = grid.height - 1 - row;
    for (int ix = 0; ix < grid.width; ++ix) out << (grid.occupied(ix, iy) ? '1' : '0');
    out << "\n";
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher 1D squared distance transform. Entries with an
// infinite source value carry no parabola; a row with no finite entry stays
// infinite.
void squared_dt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  d.assign(n, kInf);
  int first = 0;
  while (first < n && f[first] == kInf) ++first;
  if (first == n) return;

  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Exact squared cell-center distances to the nearest seed cell.
std::vector<double> squared_dt_2d(int width, int height,
                                  const std::vector<uint8_t>& seed) {
  std::vector<double> field(static_cast<size_t>(width) * height);
  for (size_t i = 0; i < field.size(); ++i) field[i] = seed[i] ? 0.0 : kInf;

  std::vector<double> buf_in, buf_out;
  for (int iy = 0; iy < height; ++iy) {
    buf_in.assign(field.begin() + static_cast<size_t>(iy) * width,
                  field.begin() + static_cast<size_t>(iy + 1) * width);
    squared_dt_1d(buf_in, buf_out);
    std::copy(buf_out.begin(), buf_out.end(), field.begin() + static_cast<size_t>(iy) * width);
  }
  for (int ix = 0; ix < width; ++ix) {
    buf_in.resize(height);
    for (int iy = 0; iy < height; ++iy) buf_in[iy] = field[iy * width + ix];
    squared_dt_1d(buf_in, buf_out);
    for (int iy = 0; iy < height; ++iy) field[iy * width + ix] = buf_out[iy];
  }
  return field;
}

}  // namespace

GridSDF build_sdf(const OccupancyGrid& grid, double clamp_margin) {
  grid.validate();
  const size_t n = grid.cells.size();
  bool any_obstacle = false;
  bool any_free = false;
  for (uint8_t c : grid.cells) (c ? any_obstacle : any_free) = true;
  if (!any_free) throw DegenerateMapError("occupancy grid has no free cells");

  const double diagonal =
      std::hypot(grid.width * grid.cell_size, grid.height * grid.cell_size);
  std::vector<double> distances(n, diagonal);

  if (any_obstacle) {
    const std::vector<double> to_obstacle = squared_dt_2d(grid.width, grid.height, grid.cells);
    std::vector<uint8_t> free_mask(n);
    for (size_t i = 0; i < n; ++i) free_mask[i] = grid.cells[i] ? 0 : 1;
    const std::vector<double> to_free = squared_dt_2d(grid.width, grid.height, free_mask);
    for (size_t i = 0; i < n; ++i) {
      if (grid.cells[i]) {
        distances[i] = -grid.cell_size * std::sqrt(to_free[i]);
      } else {
        distances[i] = std::min(diagonal, grid.cell_size * std::sqrt(to_obstacle[i]));
      }
    }
  }

  return GridSDF(grid.origin, grid.cell_size, grid.width, grid.height,
                 std::move(distances), clamp_margin);
}

GridSDF::GridSDF(Vec2 origin, double cell_size, int width, int height,
                 std::vector<double> distances, double clamp_margin)
    : origin_(origin),
      cell_size_(cell_size),
      width_(width),
      height_(height),
      distances_(std::move(distances)),
      clamp_margin_(clamp_margin) {
  if (width_ <= 0 || height_ <= 0 || cell_size_ <= 0.0 ||
      distances_.size() != static_cast<size_t>(width_) * height_) {
    throw ParameterError("SDF dimensions and storage do not match");
  }
}

SdfSample GridSDF::query(const Vec2& p) const {
  const Vec2 extent(width_ * cell_size_, height_ * cell_size_);
  const Vec2 rel = p - origin_;
  if (rel.x() < -clamp_margin_ || rel.y() < -clamp_margin_ ||
      rel.x() > extent.x() + clamp_margin_ || rel.y() > extent.y() + clamp_margin_) {
    std::ostringstream msg;
    msg << "SDF query (" << p.x() << ", " << p.y() << ") beyond grid + margin";
    throw BoundsError(msg.str());
  }

  SdfSample sample;
  sample.clamped = rel.x() < 0.0 || rel.y() < 0.0 || rel.x() > extent.x() ||
                   rel.y() > extent.y();

  // Continuous coordinates on the cell-center lattice.
  double gx = rel.x() / cell_size_ - 0.5;
  double gy = rel.y() / cell_size_ - 0.5;
  const bool clamped_x = gx < 0.0 || gx > width_ - 1.0;
  const bool clamped_y = gy < 0.0 || gy > height_ - 1.0;
  gx = std::clamp(gx, 0.0, static_cast<double>(width_ - 1));
  gy = std::clamp(gy, 0.0, static_cast<double>(height_ - 1));

  int ix = std::min(static_cast<int>(gx), width_ - 2);
  int iy = std::min(static_cast<int>(gy), height_ - 2);
  if (width_ == 1) ix = 0;
  if (height_ == 1) iy = 0;
  const double tx = width_ == 1 ? 0.0 : gx - ix;
  const double ty = height_ == 1 ? 0.0 : gy - iy;

  const double d00 = value_at_cell(ix, iy);
  const double d10 = width_ == 1 ? d00 : value_at_cell(ix + 1, iy);
  const double d01 = height_ == 1 ? d00 : value_at_cell(ix, iy + 1);
  const double d11 = (width_ == 1 || height_ == 1)
                         ? (width_ == 1 ? d01 : d10)
                         : value_at_cell(ix + 1, iy + 1);

  sample.distance = (1.0 - tx) * (1.0 - ty) * d00 + tx * (1.0 - ty) * d10 +
                    (1.0 - tx) * ty * d01 + tx * ty * d11;
  sample.gradient.x() =
      clamped_x ? 0.0 : ((d10 - d00) * (1.0 - ty) + (d11 - d01) * ty) / cell_size_;
  sample.gradient.y() =
      clamped_y ? 0.0 : ((d01 - d00) * (1.0 - tx) + (d11 - d10) * tx) / cell_size_;
  return sample;
}

double obstacle_hinge(double d, double eps) {
  if (eps <= 0.0) throw ParameterError("hinge eps must be positive");
  return d <= eps ? -d + eps : 0.0;
}

ObstacleFactor::ObstacleFactor(const VarKey& key, std::shared_ptr<const GridSDF> sdf,
                               double radius, double eps, double sigma)
    : Factor(FactorKind::kObstacle, {key}, NoiseModel::isotropic(1, sigma)),
      sdf_(std::move(sdf)),
      radius_(radius),
      eps_(eps) {
  if (radius_ <= 0.0) throw ParameterError("obstacle factor radius must be positive");
  if (eps_ <= 0.0) throw ParameterError("obstacle factor eps must be positive");
}

Eigen::VectorXd ObstacleFactor::residual(const std::vector<StateVariable>& states) const {
  const double clearance = sdf_->query(states[0].position).distance - radius_;
  Eigen::VectorXd r(1);
  r(0) = obstacle_hinge(clearance, eps_);
  return r;
}

std::vector<Eigen::MatrixXd> ObstacleFactor::jacobians(
    const std::vector<StateVariable>& states) const {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(1, 4);
  const SdfSample s = sdf_->query(states[0].position);
  // Subgradient choice: exactly at the hinge boundary the zero branch wins.
  if (s.distance - radius_ < eps_) {
    jac(0, 0) = -s.gradient.x();
    jac(0, 1) = -s.gradient.y();
  }
  return {jac};
}

std::vector<FactorPtr> make_obstacle_factors(const Trajectory& traj,
                                             std::shared_ptr<const GridSDF> sdf,
                                             const RobotShape& shape, double eps,
                                             double sigma) {
  traj.validate();
  shape.validate();
  if (eps <= 0.0) throw ParameterError("obstacle eps must be positive");

  std::vector<FactorPtr> factors;
  factors.reserve(traj.steps());
  for (int k = 0; k < traj.steps(); ++k) {
    factors.push_back(
        std::make_shared<ObstacleFactor>(traj.key(k), sdf, shape.radius, eps, sigma));
  }
  return factors;
}

}  // namespace trustfg
