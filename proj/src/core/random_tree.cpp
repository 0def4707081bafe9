#include "treetx/core/random_tree.hpp"

#include "treetx/core/errors.hpp"

namespace treetx {

SyntaxTree random_tree(Rng& rng, const RandomTreeOptions& o) {
  if (o.nodes == 0) throw Error("random_tree: need at least one node");
  if (o.type_vocab == 0) throw Error("random_tree: empty type vocabulary");
  SyntaxTree tree;
  tree.nodes.resize(o.nodes);
  std::vector<NodeId> open{0};  // nodes that can still take a child
  for (NodeId i = 0; i < o.nodes; ++i) {
    SyntaxNode& n = tree.nodes[i];
    n.id = i;
    n.type_id = static_cast<std::int32_t>(rng.index(o.type_vocab));
    if (o.token_vocab > 0 && rng.chance(o.token_probability)) {
      n.token_id = static_cast<std::int32_t>(rng.index(o.token_vocab));
    }
    if (i == 0) continue;
    const std::size_t slot = rng.index(open.size());
    const NodeId parent = open[slot];
    tree.nodes[parent].children.push_back(i);
    if (o.max_children > 0 && tree.nodes[parent].children.size() >= o.max_children) {
      open[slot] = open.back();
      open.pop_back();
    }
    open.push_back(i);
  }
  tree.root = 0;
  validate(tree);
  return renumber_preorder(tree);
}

}  // namespace treetx
