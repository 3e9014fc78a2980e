#include "trustfg/types.hpp"

namespace trustfg {

std::string to_string(const VarKey& key) {
  return "(agent " + std::to_string(key.agent_id) + ", step " +
         std::to_string(key.time_index) + ")";
}

std::string to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::kGpPrior: return "gp_prior";
    case FactorKind::kAnchor: return "anchor";
    case FactorKind::kObstacle: return "obstacle";
    case FactorKind::kProximity: return "proximity";
    case FactorKind::kConsistency: return "consistency";
  }
  return "unknown";
}

}  // namespace trustfg
