#include "trustfg/factor_graph.hpp"

namespace trustfg {

void FactorGraph::add_variable(const VarKey& key, const StateVariable& initial) {
  if (!initial.is_finite()) {
    throw ParameterError("initial state for " + to_string(key) + " is not finite");
  }
  variables_[key] = initial;
}

void FactorGraph::add_factor(FactorPtr factor) {
  for (const auto& key : factor->keys()) {
    if (!has_variable(key)) {
      throw UnresolvedVariableError("factor references unregistered variable " +
                                    to_string(key));
    }
  }
  factors_.push_back(std::move(factor));
}

Assignment FactorGraph::initial_assignment() const {
  Assignment values;
  for (const auto& [key, state] : variables_) values.set(key, state);
  return values;
}

std::size_t FactorGraph::count_kind(FactorKind kind) const {
  std::size_t n = 0;
  for (const auto& f : factors_) {
    if (f->kind() == kind) ++n;
  }
  return n;
}

double total_cost(const FactorGraph& graph, const Assignment& values) {
  double cost = 0.0;
  for (const auto& factor : graph.factors()) {
    cost += factor->cost(values.gather(factor->keys()));
  }
  return cost;
}

}  // namespace trustfg
