#include "treetx/core/errors.hpp"

namespace treetx {

const char* to_string(ValidationKind kind) {
  switch (kind) {
    case ValidationKind::kCycleDetected: return "CycleDetected";
    case ValidationKind::kOrphanNode: return "OrphanNode";
    case ValidationKind::kDuplicateParent: return "DuplicateParent";
    case ValidationKind::kDuplicateId: return "DuplicateId";
    case ValidationKind::kMissingRoot: return "MissingRoot";
    case ValidationKind::kDanglingChild: return "DanglingChild";
    case ValidationKind::kNonDenseId: return "NonDenseId";
    case ValidationKind::kLabelOutOfTree: return "LabelOutOfTree";
  }
  return "Unknown";
}

ValidationError::ValidationError(ValidationKind kind, std::int64_t node, const std::string& detail)
    : Error(std::string(to_string(kind)) + " at node " + std::to_string(node) +
            (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      node_(node) {}

}  // namespace treetx
