#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace treetx {

using NodeId = std::uint32_t;

struct SyntaxNode {
  NodeId id = 0;
  std::int32_t type_id = 0;
  std::optional<std::int32_t> token_id;
  std::vector<NodeId> children;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const SyntaxNode&) const = default;
};

/// Rooted, ordered tree of typed nodes. Node `i` of `nodes` carries id `i`
/// once the tree has been validated.
struct SyntaxTree {
  std::vector<SyntaxNode> nodes;
  NodeId root = 0;
  std::optional<std::int32_t> label;
  std::map<NodeId, std::int32_t> node_labels;

  std::size_t size() const { return nodes.size(); }
  const SyntaxNode& node(NodeId id) const { return nodes.at(id); }
  SyntaxNode& node(NodeId id) { return nodes.at(id); }

  bool operator==(const SyntaxTree&) const = default;
};

/// Throws ValidationError unless `tree` is a valid rooted tree with dense ids.
void validate(const SyntaxTree& tree);

/// Number of levels; a single node has depth 1.
std::size_t depth(const SyntaxTree& tree);

struct BranchingStats {
  std::size_t max_children = 0;
  double avg_children = 0.0;  // over non-leaf nodes, 0 when there are none
  std::size_t node_count = 0;
};

BranchingStats branching_stats(const SyntaxTree& tree);

// Traversal helpers. All of them assume a validated tree.

/// parent[i] of every node; the root maps to std::nullopt.
std::vector<std::optional<NodeId>> parents(const SyntaxTree& tree);

/// Distance from the root, root = 0.
std::vector<std::size_t> node_depths(const SyntaxTree& tree);

/// Longest downward path to a leaf, leaves = 0.
std::vector<std::size_t> node_heights(const SyntaxTree& tree);

std::vector<NodeId> preorder(const SyntaxTree& tree);
std::vector<NodeId> postorder(const SyntaxTree& tree);

/// levels[k] holds the nodes at distance k from the root, in pre-order.
std::vector<std::vector<NodeId>> levels_by_depth(const SyntaxTree& tree);

/// Ids of `id` and all its descendants, in pre-order.
std::vector<NodeId> subtree(const SyntaxTree& tree, NodeId id);

/// Renumbers nodes so ids follow pre-order. Labels move with their nodes.
SyntaxTree renumber_preorder(const SyntaxTree& tree);

/// FNV-1a digest over the structure and symbols (labels excluded).
std::uint64_t structural_hash(const SyntaxTree& tree);

}  // namespace treetx
