#include "treetx/core/syntax_tree.hpp"

#include <algorithm>

#include "treetx/core/errors.hpp"

namespace treetx {

void validate(const SyntaxTree& tree) {
  const std::size_t n = tree.nodes.size();
  if (n == 0) throw ValidationError(ValidationKind::kMissingRoot, tree.root, "tree has no nodes");

  std::vector<bool> seen(n, false);
  for (const auto& node : tree.nodes) {
    if (node.id < n && seen[node.id]) throw ValidationError(ValidationKind::kDuplicateId, node.id);
    if (node.id < n) seen[node.id] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.nodes[i].id != i) throw ValidationError(ValidationKind::kNonDenseId, tree.nodes[i].id);
  }
  if (tree.root >= n) throw ValidationError(ValidationKind::kMissingRoot, tree.root);

  std::vector<std::int64_t> parent(n, -1);
  for (const auto& node : tree.nodes) {
    for (NodeId child : node.children) {
      if (child >= n) throw ValidationError(ValidationKind::kDanglingChild, child);
      if (child == node.id || child == tree.root) {
        throw ValidationError(ValidationKind::kCycleDetected, child);
      }
      if (parent[child] >= 0) {
        throw ValidationError(ValidationKind::kDuplicateParent, child,
                              "listed as child of " + std::to_string(parent[child]) + " and " +
                                  std::to_string(node.id));
      }
      parent[child] = node.id;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i != tree.root && parent[i] < 0) throw ValidationError(ValidationKind::kOrphanNode, i);
  }

  // With unique parents, anything unreachable from the root sits on a cycle.
  std::vector<bool> reached(n, false);
  std::vector<NodeId> stack{tree.root};
  reached[tree.root] = true;
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    for (NodeId child : tree.nodes[id].children) {
      if (reached[child]) throw ValidationError(ValidationKind::kCycleDetected, child);
      reached[child] = true;
      stack.push_back(child);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!reached[i]) throw ValidationError(ValidationKind::kCycleDetected, i);
  }
  for (const auto& [id, label] : tree.node_labels) {
    if (id >= n) throw ValidationError(ValidationKind::kLabelOutOfTree, id);
  }
}

std::vector<std::optional<NodeId>> parents(const SyntaxTree& tree) {
  std::vector<std::optional<NodeId>> out(tree.size());
  for (const auto& node : tree.nodes) {
    for (NodeId child : node.children) out[child] = node.id;
  }
  return out;
}

std::vector<NodeId> preorder(const SyntaxTree& tree) {
  std::vector<NodeId> order;
  order.reserve(tree.size());
  std::vector<NodeId> stack{tree.root};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const auto& children = tree.nodes[id].children;
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

std::vector<NodeId> postorder(const SyntaxTree& tree) {
  // Reverse of a root-right-left walk.
  std::vector<NodeId> order;
  order.reserve(tree.size());
  std::vector<NodeId> stack{tree.root};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    order.push_back(id);
    for (NodeId child : tree.nodes[id].children) stack.push_back(child);
  }
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> node_depths(const SyntaxTree& tree) {
  std::vector<std::size_t> depths(tree.size(), 0);
  for (NodeId id : preorder(tree)) {
    for (NodeId child : tree.nodes[id].children) depths[child] = depths[id] + 1;
  }
  return depths;
}

std::vector<std::size_t> node_heights(const SyntaxTree& tree) {
  std::vector<std::size_t> heights(tree.size(), 0);
  for (NodeId id : postorder(tree)) {
    for (NodeId child : tree.nodes[id].children) {
      heights[id] = std::max(heights[id], heights[child] + 1);
    }
  }
  return heights;
}

std::size_t depth(const SyntaxTree& tree) {
  validate(tree);
  return node_heights(tree)[tree.root] + 1;
}

BranchingStats branching_stats(const SyntaxTree& tree) {
  validate(tree);
  BranchingStats stats;
  stats.node_count = tree.size();
  std::size_t non_leaf = 0;
  std::size_t total = 0;
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    ++non_leaf;
    total += node.children.size();
    stats.max_children = std::max(stats.max_children, node.children.size());
  }
  stats.avg_children = non_leaf == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(non_leaf);
  return stats;
}

std::vector<std::vector<NodeId>> levels_by_depth(const SyntaxTree& tree) {
  auto depths = node_depths(tree);
  std::vector<std::vector<NodeId>> levels;
  for (NodeId id : preorder(tree)) {
    if (levels.size() <= depths[id]) levels.resize(depths[id] + 1);
    levels[depths[id]].push_back(id);
  }
  return levels;
}

std::vector<NodeId> subtree(const SyntaxTree& tree, NodeId id) {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    const auto& children = tree.nodes.at(cur).children;
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

SyntaxTree renumber_preorder(const SyntaxTree& tree) {
  auto order = preorder(tree);
  std::vector<NodeId> new_id(tree.size());
  for (std::size_t i = 0; i < order.size(); ++i) new_id[order[i]] = static_cast<NodeId>(i);

  SyntaxTree out;
  out.root = 0;
  out.label = tree.label;
  out.nodes.resize(tree.size());
  for (NodeId old : order) {
    SyntaxNode node = tree.nodes[old];
    node.id = new_id[old];
    for (auto& child : node.children) child = new_id[child];
    out.nodes[node.id] = std::move(node);
  }
  for (const auto& [id, label] : tree.node_labels) out.node_labels[new_id[id]] = label;
  return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void mix(std::uint64_t& h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffU;
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t structural_hash(const SyntaxTree& tree) {
  std::uint64_t h = kFnvOffset;
  mix(h, tree.root);
  mix(h, tree.size());
  for (const auto& node : tree.nodes) {
    mix(h, node.id);
    mix(h, static_cast<std::uint64_t>(node.type_id));
    mix(h, node.token_id ? static_cast<std::uint64_t>(*node.token_id) : ~0ULL);
    mix(h, node.children.size());
    for (NodeId child : node.children) mix(h, child);
  }
  return h;
}

}  // namespace treetx
