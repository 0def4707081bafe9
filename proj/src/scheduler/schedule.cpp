#include "treetx/scheduler/schedule.hpp"

#include <algorithm>
#include <bit>
#include <map>

namespace treetx::sched {

std::size_t padded_width(std::size_t n) { return n <= 1 ? 1 : std::bit_ceil(n); }

Schedule build_schedule(const std::vector<const SyntaxTree*>& batch) {
  Schedule s;
  std::vector<std::map<std::size_t, std::vector<NodeRef>>> by_height;
  std::vector<NodeRef> leaves;
  for (std::uint32_t t = 0; t < batch.size(); ++t) {
    const SyntaxTree& tree = *batch[t];
    validate(tree);
    const auto heights = node_heights(tree);
    for (const auto& node : tree.nodes) {
      const NodeRef ref{t, node.id};
      if (node.is_leaf()) {
        leaves.push_back(ref);
        continue;
      }
      const std::size_t h = heights[node.id];
      if (by_height.size() <= h) by_height.resize(h + 1);
      by_height[h][padded_width(node.children.size())].push_back(ref);
    }
    const auto levels = levels_by_depth(tree);
    if (s.top_down.size() < levels.size()) s.top_down.resize(levels.size());
    for (std::size_t d = 0; d < levels.size(); ++d) {
      for (NodeId id : levels[d]) s.top_down[d].push_back({t, id});
    }
  }
  if (batch.empty()) return s;
  s.bottom_up.push_back(BottomUpGroup{{Bucket{0, std::move(leaves)}}});
  for (std::size_t h = 1; h < by_height.size(); ++h) {
    BottomUpGroup group;
    for (auto& [width, nodes] : by_height[h]) group.buckets.push_back(Bucket{width, std::move(nodes)});
    s.bottom_up.push_back(std::move(group));
  }
  return s;
}

Schedule build_schedule(const std::vector<SyntaxTree>& batch) {
  std::vector<const SyntaxTree*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& t : batch) ptrs.push_back(&t);
  return build_schedule(ptrs);
}

void check_schedule(const Schedule& schedule, const std::vector<SyntaxTree>& batch) {
  auto where = [](NodeRef r) {
    return " (tree " + std::to_string(r.tree) + ", node " + std::to_string(r.node) + ")";
  };
  // group index per node, -1 = unscheduled
  std::vector<std::vector<std::int64_t>> up(batch.size()), down(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    up[t].assign(batch[t].size(), -1);
    down[t].assign(batch[t].size(), -1);
  }
  auto in_range = [&](NodeRef r) { return r.tree < batch.size() && r.node < batch[r.tree].size(); };

  for (std::size_t gi = 0; gi < schedule.bottom_up.size(); ++gi) {
    for (const auto& bucket : schedule.bottom_up[gi].buckets) {
      for (NodeRef r : bucket.nodes) {
        if (!in_range(r)) throw DependencyViolation("bottom-up entry outside the batch" + where(r), r);
        if (up[r.tree][r.node] >= 0) throw DependencyViolation("node scheduled twice bottom-up" + where(r), r);
        up[r.tree][r.node] = static_cast<std::int64_t>(gi);
        const auto& node = batch[r.tree].node(r.node);
        if (gi == 0 && !node.is_leaf()) throw DependencyViolation("non-leaf in the leaf group" + where(r), r);
        if (gi > 0) {
          if (node.is_leaf()) throw DependencyViolation("leaf scheduled as a unit step" + where(r), r);
          if (bucket.width < node.children.size() || !std::has_single_bit(bucket.width)) {
            throw DependencyViolation("bucket width cannot hold the children" + where(r), r);
          }
        }
      }
    }
  }
  for (std::size_t gi = 0; gi < schedule.top_down.size(); ++gi) {
    for (NodeRef r : schedule.top_down[gi]) {
      if (!in_range(r)) throw DependencyViolation("top-down entry outside the batch" + where(r), r);
      if (down[r.tree][r.node] >= 0) throw DependencyViolation("node scheduled twice top-down" + where(r), r);
      down[r.tree][r.node] = static_cast<std::int64_t>(gi);
    }
  }
  for (std::uint32_t t = 0; t < batch.size(); ++t) {
    const auto& tree = batch[t];
    for (const auto& node : tree.nodes) {
      const NodeRef r{t, node.id};
      if (up[t][node.id] < 0) throw DependencyViolation("node missing from bottom-up groups" + where(r), r);
      if (down[t][node.id] < 0) throw DependencyViolation("node missing from top-down groups" + where(r), r);
      if (node.id == tree.root && down[t][node.id] != 0) {
        throw DependencyViolation("root outside top-down group 0" + where(r), r);
      }
      for (NodeId child : node.children) {
        if (up[t][node.id] <= up[t][child]) {
          throw DependencyViolation("parent scheduled before its child bottom-up" + where(r), r);
        }
        if (down[t][child] <= down[t][node.id]) {
          throw DependencyViolation("child scheduled before its parent top-down" + where({t, child}), {t, child});
        }
      }
    }
  }
}

}  // namespace treetx::sched
