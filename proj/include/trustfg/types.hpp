#pragma once

#include <Eigen/Core>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trustfg/errors.hpp"

namespace trustfg {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;

/// Identifies one agent's state at one support time.
struct VarKey {
  int agent_id = 0;
  int time_index = 0;

  auto operator<=>(const VarKey&) const = default;
};

std::string to_string(const VarKey& key);

/// One support state: planar position [m] and velocity [m/s].
/// Stacked layout is (x, y, vx, vy); every factor block is 4 columns wide.
struct StateVariable {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();

  static constexpr int kDim = 4;

  Vec4 to_vector() const {
    Vec4 v;
    v << position.x(), position.y(), velocity.x(), velocity.y();
    return v;
  }

  static StateVariable from_vector(const Vec4& v) {
    StateVariable s;
    s.position = v.head<2>();
    s.velocity = v.tail<2>();
    return s;
  }

  bool is_finite() const {
    return position.allFinite() && velocity.allFinite();
  }
};

enum class FactorKind { kGpPrior, kAnchor, kObstacle, kProximity, kConsistency };

std::string to_string(FactorKind kind);

/// Maps variable keys to state values. Ordered by key so that iteration,
/// stacking, and serialization are deterministic.
class Assignment {
 public:
  using Map = std::map<VarKey, StateVariable>;

  Assignment() = default;

  void set(const VarKey& key, const StateVariable& state) { values_[key] = state; }

  bool has(const VarKey& key) const { return values_.count(key) > 0; }

  const StateVariable& at(const VarKey& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
      throw UnresolvedVariableError("assignment has no variable " + to_string(key));
    }
    return it->second;
  }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  Map::const_iterator begin() const { return values_.begin(); }
  Map::const_iterator end() const { return values_.end(); }

  std::vector<StateVariable> gather(const std::vector<VarKey>& keys) const {
    std::vector<StateVariable> states;
    states.reserve(keys.size());
    for (const auto& k : keys) states.push_back(at(k));
    return states;
  }

 private:
  Map values_;
};

}  // namespace trustfg
