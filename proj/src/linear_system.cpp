#include "trustfg/linear_system.hpp"

namespace trustfg {

LinearSystem::LinearSystem(std::vector<Row> rows, std::vector<VarKey> ordering,
                           int total_rows)
    : rows_(std::move(rows)), ordering_(std::move(ordering)), total_rows_(total_rows) {
  for (int i = 0; i < static_cast<int>(ordering_.size()); ++i) {
    column_of_[ordering_[i]] = i;
  }
}

int LinearSystem::column_block_of(const VarKey& key) const {
  auto it = column_of_.find(key);
  if (it == column_of_.end()) {
    throw UnresolvedVariableError("no column block for " + to_string(key));
  }
  return it->second;
}

Eigen::SparseMatrix<double> LinearSystem::sparse_matrix() const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& row : rows_) {
    for (const auto& [col_block, jac] : row.blocks) {
      for (int r = 0; r < jac.rows(); ++r) {
        for (int c = 0; c < jac.cols(); ++c) {
          triplets.emplace_back(row.row_offset + r, col_block * kBlockSize + c,
                                jac(r, c));
        }
      }
    }
  }
  Eigen::SparseMatrix<double> a(total_rows_, num_scalar_cols());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Eigen::VectorXd LinearSystem::stacked_rhs() const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(total_rows_);
  for (const auto& row : rows_) {
    b.segment(row.row_offset, row.rhs.size()) = row.rhs;
  }
  return b;
}

Eigen::VectorXd LinearSystem::gradient() const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(num_scalar_cols());
  for (const auto& row : rows_) {
    for (const auto& [col_block, jac] : row.blocks) {
      g.segment(col_block * kBlockSize, kBlockSize) += jac.transpose() * row.rhs;
    }
  }
  return g;
}

Eigen::SparseMatrix<double> LinearSystem::normal_matrix(double lambda) const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& row : rows_) {
    for (const auto& [ci, ji] : row.blocks) {
      for (const auto& [cj, jj] : row.blocks) {
        const Eigen::MatrixXd h = ji.transpose() * jj;
        for (int r = 0; r < kBlockSize; ++r) {
          for (int c = 0; c < kBlockSize; ++c) {
            triplets.emplace_back(ci * kBlockSize + r, cj * kBlockSize + c, h(r, c));
          }
        }
      }
    }
  }
  if (lambda > 0.0) {
    for (int i = 0; i < num_scalar_cols(); ++i) {
      triplets.emplace_back(i, i, lambda);
    }
  }
  Eigen::SparseMatrix<double> h(num_scalar_cols(), num_scalar_cols());
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

double LinearSystem::cost_at_zero() const {
  double c = 0.0;
  for (const auto& row : rows_) c += 0.5 * row.rhs.squaredNorm();
  return c;
}

std::vector<std::pair<int, int>> LinearSystem::block_pattern() const {
  std::vector<std::pair<int, int>> pattern;
  for (const auto& row : rows_) {
    for (const auto& [col_block, jac] : row.blocks) {
      (void)jac;
      pattern.emplace_back(row.factor_index, col_block);
    }
  }
  return pattern;
}

LinearSystem linearize(const FactorGraph& graph, const Assignment& values) {
  std::vector<VarKey> ordering;
  ordering.reserve(graph.num_variables());
  for (const auto& [key, state] : graph.variables()) {
    (void)state;
    ordering.push_back(key);  // map iteration: time-major within agent
  }
  std::map<VarKey, int> column_of;
  for (int i = 0; i < static_cast<int>(ordering.size()); ++i) column_of[ordering[i]] = i;

  std::vector<LinearSystem::Row> rows;
  rows.reserve(graph.num_factors());
  int row_offset = 0;
  for (int fi = 0; fi < static_cast<int>(graph.num_factors()); ++fi) {
    const Factor& factor = *graph.factors()[fi];
    const auto states = values.gather(factor.keys());
    const Eigen::VectorXd r = factor.residual(states);
    const auto jacs = factor.jacobians(states);
    if (!r.allFinite()) {
      throw LinearizationError("non-finite residual in factor " + std::to_string(fi) +
                               " (" + to_string(factor.kind()) + ")");
    }

    LinearSystem::Row row;
    row.factor_index = fi;
    row.row_offset = row_offset;
    row.rhs = -factor.noise().whiten(r);
    for (std::size_t ki = 0; ki < factor.keys().size(); ++ki) {
      if (!jacs[ki].allFinite()) {
        throw LinearizationError("non-finite jacobian in factor " + std::to_string(fi) +
                                 " (" + to_string(factor.kind()) + ")");
      }
      row.blocks.emplace_back(column_of.at(factor.keys()[ki]),
                              factor.noise().whiten_jacobian(jacs[ki]));
    }
    rows.push_back(std::move(row));
    row_offset += factor.residual_dim();
  }

  return LinearSystem(std::move(rows), std::move(ordering), row_offset);
}

Assignment apply_step(const Assignment& values, const LinearSystem& system,
                      const Eigen::VectorXd& delta) {
  Assignment out = values;
  const auto& ordering = system.ordering();
  for (int i = 0; i < static_cast<int>(ordering.size()); ++i) {
    const Vec4 d = delta.segment<4>(i * LinearSystem::kBlockSize);
    out.set(ordering[i],
            StateVariable::from_vector(values.at(ordering[i]).to_vector() + d));
  }
  return out;
}

}  // namespace trustfg
