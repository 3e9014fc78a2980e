#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <map>
#include <utility>
#include <vector>

#include "trustfg/factor_graph.hpp"

namespace trustfg {

/// Whitened linearization of a factor graph at a fixed assignment. Stored in
/// block-row form: one row band per factor, one 4-wide column block per
/// connected variable. Minimizing ||A delta - b||^2 gives the Gauss-Newton
/// step; the block pattern equals the factor-variable adjacency by
/// construction, so no fill appears outside connected blocks.
class LinearSystem {
 public:
  static constexpr int kBlockSize = StateVariable::kDim;

  struct Row {
    int factor_index = 0;
    int row_offset = 0;
    /// (column block index, whitened jacobian block) pairs, in key order.
    std::vector<std::pair<int, Eigen::MatrixXd>> blocks;
    /// Negated whitened residual, so the quadratic model is 0.5*||A d - b||^2.
    Eigen::VectorXd rhs;
  };

  LinearSystem(std::vector<Row> rows, std::vector<VarKey> ordering, int total_rows);

  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<VarKey>& ordering() const { return ordering_; }
  int column_block_of(const VarKey& key) const;

  int num_block_cols() const { return static_cast<int>(ordering_.size()); }
  int num_scalar_cols() const { return num_block_cols() * kBlockSize; }
  int num_scalar_rows() const { return total_rows_; }

  /// Stacked sparse A (whitened jacobian) and b (negated whitened residuals).
  Eigen::SparseMatrix<double> sparse_matrix() const;
  Eigen::VectorXd stacked_rhs() const;

  /// Gradient of the quadratic model at delta = 0: A^T b.
  Eigen::VectorXd gradient() const;

  /// Normal matrix A^T A + lambda I as a sparse matrix.
  Eigen::SparseMatrix<double> normal_matrix(double lambda) const;

  /// 0.5*||b||^2; equals the graph cost at the linearization point.
  double cost_at_zero() const;

  /// Occupied (factor row, column block) pairs; used to audit sparsity.
  std::vector<std::pair<int, int>> block_pattern() const;

 private:
  std::vector<Row> rows_;
  std::vector<VarKey> ordering_;
  std::map<VarKey, int> column_of_;
  int total_rows_ = 0;
};

/// Whitens every factor's jacobian and residual at the given assignment.
/// Throws LinearizationError (naming the factor) on non-finite values.
LinearSystem linearize(const FactorGraph& graph, const Assignment& values);

/// Applies a stacked step to an assignment using the system's ordering.
Assignment apply_step(const Assignment& values, const LinearSystem& system,
                      const Eigen::VectorXd& delta);

}  // namespace trustfg
