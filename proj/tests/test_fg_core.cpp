#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "trustfg/errors.hpp"
#include "trustfg/factor.hpp"
#include "trustfg/factor_graph.hpp"
#include "trustfg/gp_trajectory.hpp"
#include "trustfg/linear_system.hpp"
#include "trustfg/noise_model.hpp"
#include "trustfg/types.hpp"
#include "trustfg/world.hpp"
#include "test_helpers.hpp"

using namespace trustfg;

namespace {

// Scalar residual pinned to a constant; exercises cost plumbing without any
// dependence on the state.
class ConstantFactor final : public Factor {
 public:
  ConstantFactor(const VarKey& key, double value, double sigma)
      : Factor(FactorKind::kAnchor, {key}, NoiseModel::isotropic(1, sigma)), value_(value) {}

  Eigen::VectorXd residual(const std::vector<StateVariable>&) const override {
    return Eigen::VectorXd::Constant(1, value_);
  }
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>&) const override {
    return {Eigen::MatrixXd::Zero(1, 4)};
  }

 private:
  double value_;
};

// 1D anchor on the x component only, so the scalar textbook cases read off
// directly.
class ScalarAnchor final : public Factor {
 public:
  ScalarAnchor(const VarKey& key, double mean, double sigma = 1.0)
      : Factor(FactorKind::kAnchor, {key}, NoiseModel::isotropic(1, sigma)), mean_(mean) {}

  Eigen::VectorXd residual(const std::vector<StateVariable>& s) const override {
    return Eigen::VectorXd::Constant(1, s[0].position.x() - mean_);
  }
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>&) const override {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(1, 4);
    j(0, 0) = 1.0;
    return {j};
  }

 private:
  double mean_;
};

// Smooth nonlinear residual touching all four state dimensions; used for the
// finite-difference and quadratic-model checks on a genuinely curved factor.
class SmoothFactor final : public Factor {
 public:
  explicit SmoothFactor(const VarKey& key)
      : Factor(FactorKind::kObstacle, {key}, NoiseModel::isotropic(2, 1.0)) {}

  Eigen::VectorXd residual(const std::vector<StateVariable>& s) const override {
    const Vec4 v = s[0].to_vector();
    Eigen::VectorXd r(2);
    r << std::sin(v[0]) + v[1] * v[1], v[2] * v[3];
    return r;
  }
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>& s) const override {
    const Vec4 v = s[0].to_vector();
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 4);
    j(0, 0) = std::cos(v[0]);
    j(0, 1) = 2.0 * v[1];
    j(1, 2) = v[3];
    j(1, 3) = v[2];
    return {j};
  }
};

class NonFiniteFactor final : public Factor {
 public:
  explicit NonFiniteFactor(const VarKey& key)
      : Factor(FactorKind::kObstacle, {key}, NoiseModel::isotropic(1, 1.0)) {}

  Eigen::VectorXd residual(const std::vector<StateVariable>&) const override {
    return Eigen::VectorXd::Constant(1, std::numeric_limits<double>::quiet_NaN());
  }
  std::vector<Eigen::MatrixXd> jacobians(const std::vector<StateVariable>&) const override {
    return {Eigen::MatrixXd::Zero(1, 4)};
  }
};

StateVariable state(double x, double y, double vx = 0.0, double vy = 0.0) {
  StateVariable s;
  s.position = Vec2(x, y);
  s.velocity = Vec2(vx, vy);
  return s;
}

}  // namespace

TEST_CASE("whitening divides by the componentwise standard deviation") {
  NoiseModel var4(Eigen::MatrixXd::Constant(1, 1, 4.0));
  Eigen::VectorXd r1 = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(var4.whiten(r1)(0) == doctest::Approx(1.0).epsilon(1e-12));

  NoiseModel unit = NoiseModel::isotropic(2, 1.0);
  Eigen::VectorXd r2(2);
  r2 << 3.0, 4.0;
  Eigen::VectorXd w2 = unit.whiten(r2);
  CHECK(w2(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(w2(1) == doctest::Approx(4.0).epsilon(1e-12));

  Eigen::VectorXd sigmas(2);
  sigmas << 1.0, 3.0;
  NoiseModel diag = NoiseModel::diagonal_sigmas(sigmas);
  CHECK(diag.covariance()(1, 1) == doctest::Approx(9.0));
  Eigen::VectorXd r3(2);
  r3 << 1.0, 3.0;
  Eigen::VectorXd w3 = diag.whiten(r3);
  CHECK(w3(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w3(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non positive definite covariances are rejected") {
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  CHECK_THROWS_AS(NoiseModel{indefinite}, NoiseModelError);

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(NoiseModel{zero}, NoiseModelError);

  CHECK_THROWS_AS(NoiseModel::isotropic(2, 0.0), NoiseModelError);
}

TEST_CASE("whitening is an isometry for random SPD covariances") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 1 + trial % 6;
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = u(rng);
    Eigen::MatrixXd cov = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
    NoiseModel model(cov);

    Eigen::VectorXd r(dim);
    for (int i = 0; i < dim; ++i) r(i) = 2.0 * u(rng);
    const Eigen::VectorXd w = model.whiten(r);
    const double direct = r.dot(cov.ldlt().solve(r));
    CHECK(w.squaredNorm() == doctest::Approx(direct).epsilon(1e-10));
    CHECK(model.half_squared_mahalanobis(r) ==
          doctest::Approx(0.5 * w.squaredNorm()).epsilon(1e-12));

    // Un-whitening with the Cholesky factor recovers the raw residual.
    Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
    CHECK((chol * w - r).norm() < 1e-12 * (1.0 + r.norm()));

    // Whitening a jacobian commutes with applying it.
    Eigen::MatrixXd jac(dim, 4);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < 4; ++j) jac(i, j) = u(rng);
    Eigen::Vector4d x(u(rng), u(rng), u(rng), u(rng));
    CHECK((model.whiten_jacobian(jac) * x - model.whiten(jac * x)).norm() < 1e-10);
  }
}

TEST_CASE("total_cost sums half squared whitened residuals") {
  const VarKey key{1, 0};

  SUBCASE("single unit residual with unit sigma costs one half") {
    FactorGraph graph;
    graph.add_variable(key, state(0, 0));
    graph.add_factor(std::make_shared<ConstantFactor>(key, 1.0, 1.0));
    CHECK(total_cost(graph, graph.initial_assignment()) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("graph with zero factors costs zero") {
    FactorGraph graph;
    graph.add_variable(key, state(3, -2));
    CHECK(total_cost(graph, graph.initial_assignment()) == 0.0);
  }

  SUBCASE("two scalar anchors at 1 and 3 evaluated at 2 cost one") {
    FactorGraph graph;
    graph.add_variable(key, state(2, 0));
    graph.add_factor(std::make_shared<ScalarAnchor>(key, 1.0));
    graph.add_factor(std::make_shared<ScalarAnchor>(key, 3.0));
    CHECK(total_cost(graph, graph.initial_assignment()) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("total equals the sum of per-factor costs exactly") {
    FactorGraph graph;
    Trajectory traj;
    traj.agent_id = 2;
    traj.dt = 0.25;
    traj.states = {state(0, 0, 1, 0), state(0.3, 0.1, 0.9, 0.2), state(0.5, 0.3, 1.1, 0.4)};
    for (int k = 0; k < traj.steps(); ++k) graph.add_variable(traj.key(k), traj.states[k]);
    for (auto& f : make_gp_prior_factors(traj, GPPriorParams{})) graph.add_factor(f);

    const Assignment values = graph.initial_assignment();
    double manual = 0.0;
    for (const auto& f : graph.factors()) manual += f->cost(values.gather(f->keys()));
    CHECK(total_cost(graph, values) == manual);
  }
}

TEST_CASE("assignment lookup, gather, and missing-key errors") {
  Assignment values;
  const VarKey a{1, 0};
  const VarKey b{1, 1};
  CHECK_FALSE(values.has(a));
  values.set(a, state(1, 2, 3, 4));
  values.set(b, state(5, 6, 7, 8));
  CHECK(values.has(a));
  CHECK(values.at(a).position.x() == 1.0);
  CHECK(values.size() == 2);

  const auto gathered = values.gather({b, a});
  REQUIRE(gathered.size() == 2);
  CHECK(gathered[0].position.x() == 5.0);
  CHECK(gathered[1].position.x() == 1.0);

  CHECK_THROWS_AS(values.at(VarKey{9, 9}), UnresolvedVariableError);
}

TEST_CASE("graphs reject factors whose keys are not registered") {
  FactorGraph graph;
  const VarKey known{1, 0};
  const VarKey unknown{1, 1};
  graph.add_variable(known, state(0, 0));

  CHECK_THROWS_AS(
      graph.add_factor(std::make_shared<AnchorFactor>(unknown, state(0, 0),
                                                      NoiseModel::isotropic(4, 1.0))),
      UnresolvedVariableError);
  CHECK(graph.num_factors() == 0);

  graph.add_factor(std::make_shared<AnchorFactor>(known, state(1, 1),
                                                  NoiseModel::isotropic(4, 1.0)));
  CHECK(graph.num_factors() == 1);
  CHECK(graph.count_kind(FactorKind::kAnchor) == 1);
  CHECK(graph.count_kind(FactorKind::kGpPrior) == 0);

  const Assignment init = graph.initial_assignment();
  CHECK(init.size() == 1);
  CHECK(init.has(known));
}

TEST_CASE("linearize stacks whitened jacobian blocks and negated residuals") {
  SUBCASE("unit-noise anchor gives the identity block and mean minus iterate") {
    const VarKey key{1, 0};
    const StateVariable mean = state(1.0, -2.0, 0.5, 0.25);
    const StateVariable at = state(0.0, 0.0, 0.0, 0.0);
    FactorGraph graph;
    graph.add_variable(key, at);
    graph.add_factor(std::make_shared<AnchorFactor>(key, mean, NoiseModel::isotropic(4, 1.0)));

    const LinearSystem sys = linearize(graph, graph.initial_assignment());
    REQUIRE(sys.rows().size() == 1);
    const auto& row = sys.rows()[0];
    REQUIRE(row.blocks.size() == 1);
    CHECK((row.blocks[0].second - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-12);
    CHECK((row.rhs - (mean.to_vector() - at.to_vector())).norm() < 1e-12);
  }

  SUBCASE("a binary smoothness factor occupies exactly two column blocks") {
    FactorGraph graph;
    graph.add_variable(VarKey{1, 0}, state(0, 0, 1, 0));
    graph.add_variable(VarKey{1, 1}, state(0.1, 0, 1, 0));
    graph.add_factor(std::make_shared<GpPriorFactor>(VarKey{1, 0}, VarKey{1, 1}, 0.1, 1.0));

    const LinearSystem sys = linearize(graph, graph.initial_assignment());
    REQUIRE(sys.rows().size() == 1);
    const auto& row = sys.rows()[0];
    REQUIRE(row.blocks.size() == 2);
    CHECK(row.blocks[0].first != row.blocks[1].first);
  }

  SUBCASE("model cost at zero step equals the graph cost") {
    std::mt19937 rng(3);
    FactorGraph graph;
    Trajectory traj;
    traj.agent_id = 1;
    traj.dt = 0.2;
    traj.states = testutil::random_states(rng, 4);
    for (int k = 0; k < traj.steps(); ++k) graph.add_variable(traj.key(k), traj.states[k]);
    for (auto& f : make_gp_prior_factors(traj, GPPriorParams{})) graph.add_factor(f);

    const Assignment values = graph.initial_assignment();
    const LinearSystem sys = linearize(graph, values);
    CHECK(sys.cost_at_zero() == doctest::Approx(total_cost(graph, values)).epsilon(1e-12));

    // The convenience accessors agree with the assembled sparse system.
    const Eigen::SparseMatrix<double> a = sys.sparse_matrix();
    const Eigen::VectorXd b = sys.stacked_rhs();
    CHECK((sys.gradient() - Eigen::VectorXd(a.transpose() * b)).norm() < 1e-12);
    CHECK(sys.cost_at_zero() == doctest::Approx(0.5 * b.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("a hinge factor outside its margin linearizes to a zero row") {
  // Free 8x8 grid except one obstacle cell near the corner; query far away.
  OccupancyGrid grid;
  grid.origin = Vec2(0, 0);
  grid.cell_size = 0.1;
  grid.width = 8;
  grid.height = 8;
  grid.cells.assign(64, 0);
  grid.set(0, 0, true);
  auto sdf = std::make_shared<GridSDF>(build_sdf(grid));

  const VarKey key{1, 0};
  FactorGraph graph;
  graph.add_variable(key, state(0.65, 0.65));
  graph.add_factor(std::make_shared<ObstacleFactor>(key, sdf, 0.05, 0.1, 1.0));

  const LinearSystem sys = linearize(graph, graph.initial_assignment());
  REQUIRE(sys.rows().size() == 1);
  const auto& row = sys.rows()[0];
  CHECK(row.rhs.norm() == 0.0);
  for (const auto& [col, block] : row.blocks) CHECK(block.norm() == 0.0);
}

TEST_CASE("linearize names factors with non-finite residuals") {
  FactorGraph graph;
  graph.add_variable(VarKey{1, 0}, state(0, 0));
  graph.add_factor(std::make_shared<NonFiniteFactor>(VarKey{1, 0}));
  CHECK_THROWS_AS(linearize(graph, graph.initial_assignment()), LinearizationError);
}

TEST_CASE("apply_step offsets states according to the column ordering") {
  FactorGraph graph;
  graph.add_variable(VarKey{1, 0}, state(1, 2, 3, 4));
  graph.add_factor(std::make_shared<AnchorFactor>(VarKey{1, 0}, state(0, 0),
                                                  NoiseModel::isotropic(4, 1.0)));
  const Assignment values = graph.initial_assignment();
  const LinearSystem sys = linearize(graph, values);

  Eigen::VectorXd delta(4);
  delta << 0.5, -0.5, 1.0, -1.0;
  const Assignment moved = apply_step(values, sys, delta);
  CHECK(moved.at(VarKey{1, 0}).position.x() == doctest::Approx(1.5));
  CHECK(moved.at(VarKey{1, 0}).position.y() == doctest::Approx(1.5));
  CHECK(moved.at(VarKey{1, 0}).velocity.x() == doctest::Approx(4.0));
  CHECK(moved.at(VarKey{1, 0}).velocity.y() == doctest::Approx(3.0));

  const Assignment same = apply_step(values, sys, Eigen::VectorXd::Zero(4));
  CHECK((same.at(VarKey{1, 0}).to_vector() - values.at(VarKey{1, 0}).to_vector()).norm() == 0.0);
}

TEST_CASE("analytic jacobians match central finite differences") {
  std::mt19937 rng(17);

  SUBCASE("anchor factor") {
    AnchorFactor f(VarKey{1, 0}, state(0.3, -0.4, 0.1, 0.2), NoiseModel::isotropic(4, 1.0));
    for (int i = 0; i < 100; ++i) {
      CHECK(testutil::fd_jacobian_badness(f, {testutil::random_state(rng)}) <= 1.0);
    }
  }

  SUBCASE("curved custom factor") {
    SmoothFactor f(VarKey{1, 0});
    for (int i = 0; i < 100; ++i) {
      CHECK(testutil::fd_jacobian_badness(f, {testutil::random_state(rng)}) <= 1.0);
    }
  }
}

TEST_CASE("quadratic model error shrinks at second order in the step") {
  const VarKey key{1, 0};
  FactorGraph graph;
  graph.add_variable(key, state(0.3, 0.7, 0.5, -0.4));
  graph.add_factor(std::make_shared<SmoothFactor>(key));

  const Assignment at = graph.initial_assignment();
  const LinearSystem sys = linearize(graph, at);
  const Eigen::SparseMatrix<double> a = sys.sparse_matrix();
  const Eigen::VectorXd b = sys.stacked_rhs();

  Eigen::VectorXd direction(4);
  direction << 0.6, -0.8, 0.5, 0.7;
  direction.normalize();

  auto model_error = [&](double t) {
    const Eigen::VectorXd delta = t * direction;
    const double model = 0.5 * (a * delta - b).squaredNorm();
    return std::abs(total_cost(graph, apply_step(at, sys, delta)) - model);
  };

  const double e1 = model_error(1e-2);
  const double e2 = model_error(5e-3);
  const double e3 = model_error(2.5e-3);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 6.0);
  CHECK(e2 / e3 > 3.0);
  CHECK(e2 / e3 < 6.0);
}
