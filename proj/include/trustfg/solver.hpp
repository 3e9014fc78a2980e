#pragma once

#include <Eigen/Core>
#include <vector>

#include "trustfg/linear_system.hpp"

namespace trustfg {

struct SolverConfig {
  int max_iterations = 100;
  double abs_cost_tol = 1e-9;
  double rel_cost_tol = 1e-6;
  double lm_initial_lambda = 1e-4;
  double lm_lambda_factor = 10.0;
  /// Stop when ||A^T b|| <= gradient_tol * (1 + cost).
  double gradient_tol = 1e-10;
  /// Damping ceiling; exceeding it without an accepted step is a stall.
  double lm_max_lambda = 1e12;
};

struct SolveResult {
  Assignment solution;
  std::vector<double> cost_history;
  bool converged = false;
  int iterations = 0;
  double final_cost = 0.0;
  double final_gradient_norm = 0.0;
};

/// Least-squares step for the whitened system: minimizes ||A delta - b||^2
/// via the normal equations with sparse Cholesky. lambda > 0 adds damping.
/// Throws RankDeficiencyError naming unconstrained keys when singular.
Eigen::VectorXd solve_linear(const LinearSystem& system, double lambda = 0.0);

SolveResult gauss_newton(const FactorGraph& graph, const Assignment& init,
                         const SolverConfig& cfg = {});

SolveResult levenberg_marquardt(const FactorGraph& graph, const Assignment& init,
                                const SolverConfig& cfg = {});

}  // namespace trustfg
