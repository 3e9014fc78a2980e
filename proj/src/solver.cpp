#include "trustfg/solver.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <string>

namespace trustfg {

namespace {

std::string unconstrained_keys_message(const LinearSystem& system,
                                       const Eigen::SparseMatrix<double>& h) {
  // A key whose diagonal block is (near) zero never appears in any active
  // residual row; report those first since they are the actionable cases.
  std::string names;
  const Eigen::VectorXd diag = h.diagonal();
  for (int b = 0; b < system.num_block_cols(); ++b) {
    const double d =
        diag.segment(b * LinearSystem::kBlockSize, LinearSystem::kBlockSize).cwiseAbs().sum();
    if (d < 1e-12) {
      if (!names.empty()) names += ", ";
      names += to_string(system.ordering()[b]);
    }
  }
  if (names.empty()) names = "none isolated; system numerically singular";
  return names;
}

}  // namespace

Eigen::VectorXd solve_linear(const LinearSystem& system, double lambda) {
  const Eigen::SparseMatrix<double> h = system.normal_matrix(lambda);
  const Eigen::VectorXd g = system.gradient();
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(h);
  if (llt.info() != Eigen::Success) {
    throw RankDeficiencyError("normal equations singular; unconstrained keys: " +
                              unconstrained_keys_message(system, h));
  }
  return llt.solve(g);
}

namespace {

bool cost_change_converged(double previous, double current, const SolverConfig& cfg) {
  const double drop = std::abs(previous - current);
  return drop <= cfg.abs_cost_tol || drop <= cfg.rel_cost_tol * std::abs(previous);
}

}  // namespace

SolveResult gauss_newton(const FactorGraph& graph, const Assignment& init,
                         const SolverConfig& cfg) {
  SolveResult result;
  result.solution = init;
  double cost = total_cost(graph, result.solution);
  result.cost_history.push_back(cost);

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const LinearSystem system = linearize(graph, result.solution);
    const double grad_norm = system.gradient().norm();
    result.final_gradient_norm = grad_norm;
    if (grad_norm <= cfg.gradient_tol * (1.0 + cost)) {
      result.converged = true;
      break;
    }

    const Eigen::VectorXd delta = solve_linear(system);
    result.solution = apply_step(result.solution, system, delta);
    const double new_cost = total_cost(graph, result.solution);
    result.cost_history.push_back(new_cost);
    ++result.iterations;

    if (cost_change_converged(cost, new_cost, cfg)) {
      cost = new_cost;
      result.converged = true;
      result.final_gradient_norm = linearize(graph, result.solution).gradient().norm();
      break;
    }
    cost = new_cost;
  }

  result.final_cost = cost;
  return result;
}

SolveResult levenberg_marquardt(const FactorGraph& graph, const Assignment& init,
                                const SolverConfig& cfg) {
  SolveResult result;
  result.solution = init;
  double cost = total_cost(graph, result.solution);
  result.cost_history.push_back(cost);
  double lambda = cfg.lm_initial_lambda;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const LinearSystem system = linearize(graph, result.solution);
    const double grad_norm = system.gradient().norm();
    result.final_gradient_norm = grad_norm;
    if (grad_norm <= cfg.gradient_tol * (1.0 + cost)) {
      result.converged = true;
      break;
    }

    // Inner damping loop: grow lambda until a step lowers the true cost.
    bool accepted = false;
    while (!accepted) {
      const Eigen::VectorXd delta = solve_linear(system, lambda);
      const Assignment candidate = apply_step(result.solution, system, delta);
      const double candidate_cost = total_cost(graph, candidate);
      if (std::isfinite(candidate_cost) && candidate_cost <= cost) {
        result.solution = candidate;
        result.cost_history.push_back(candidate_cost);
        ++result.iterations;
        accepted = true;
        lambda = std::max(lambda / cfg.lm_lambda_factor, 1e-12);
        if (cost_change_converged(cost, candidate_cost, cfg)) {
          result.converged = true;
        }
        cost = candidate_cost;
      } else {
        lambda *= cfg.lm_lambda_factor;
        if (lambda > cfg.lm_max_lambda) {
          throw SolverStallError(
              "LM damping exceeded " + std::to_string(cfg.lm_max_lambda) +
              " without an accepted step (cost " + std::to_string(cost) + ")");
        }
      }
    }
    if (result.converged) {
      result.final_gradient_norm = linearize(graph, result.solution).gradient().norm();
      break;
    }
  }

  result.final_cost = cost;
  return result;
}

}  // namespace trustfg
