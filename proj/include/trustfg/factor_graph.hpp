#pragma once

#include <map>
#include <vector>

#include "trustfg/factor.hpp"
#include "trustfg/types.hpp"

namespace trustfg {

/// The joint MAP problem: variables plus the factors connecting them.
class FactorGraph {
 public:
  void add_variable(const VarKey& key, const StateVariable& initial);

  /// Rejects factors whose keys do not resolve to a registered variable.
  void add_factor(FactorPtr factor);

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_factors() const { return factors_.size(); }

  const std::map<VarKey, StateVariable>& variables() const { return variables_; }
  const std::vector<FactorPtr>& factors() const { return factors_; }

  bool has_variable(const VarKey& key) const { return variables_.count(key) > 0; }

  /// Registered initial values as an assignment.
  Assignment initial_assignment() const;

  std::size_t count_kind(FactorKind kind) const;

 private:
  std::map<VarKey, StateVariable> variables_;
  std::vector<FactorPtr> factors_;
};

/// Sum of per-factor costs at the given assignment.
double total_cost(const FactorGraph& graph, const Assignment& values);

}  // namespace trustfg
