#pragma once

#include <cstdint>
#include <vector>

#include "treetx/core/errors.hpp"
#include "treetx/core/syntax_tree.hpp"

namespace treetx::sched {

struct NodeRef {
  std::uint32_t tree = 0;
  NodeId node = 0;
  bool operator==(const NodeRef&) const = default;
};

/// Parents of one padded width: every node here has between width/2 + 1 and
/// `width` children (width is a power of two); child slots beyond a node's
/// own count are masked.
struct Bucket {
  std::size_t width = 0;
  std::vector<NodeRef> nodes;
};

struct BottomUpGroup {
  std::vector<Bucket> buckets;
};

/// Level-synchronous plan for a batch.
///   bottom_up[0] holds every leaf (embedding only, a single bucket of width 0);
///   bottom_up[h] holds the nodes of height h.
///   top_down[0] holds the roots (h_down = h_up); top_down[t] the nodes at depth t.
struct Schedule {
  std::vector<BottomUpGroup> bottom_up;
  std::vector<std::vector<NodeRef>> top_down;

  /// Groups that apply a unit (everything except the embed-only and root groups).
  std::size_t bottom_up_steps() const { return bottom_up.empty() ? 0 : bottom_up.size() - 1; }
  std::size_t top_down_steps() const { return top_down.empty() ? 0 : top_down.size() - 1; }
  std::size_t sequential_steps() const { return bottom_up_steps() + top_down_steps(); }
};

class DependencyViolation : public Error {
 public:
  DependencyViolation(const std::string& what, NodeRef where) : Error(what), where_(where) {}
  NodeRef where() const { return where_; }

 private:
  NodeRef where_;
};

/// Groups nodes by height (bottom-up) and depth (top-down) across the batch,
/// bucketing parents by power-of-two child count.
Schedule build_schedule(const std::vector<SyntaxTree>& batch);
Schedule build_schedule(const std::vector<const SyntaxTree*>& batch);

/// Brute-force check of every Schedule invariant. Throws DependencyViolation.
void check_schedule(const Schedule& schedule, const std::vector<SyntaxTree>& batch);

/// Smallest power of two >= n (n >= 1).
std::size_t padded_width(std::size_t n);

}  // namespace treetx::sched
