#include "treetx/minilang/mutation.hpp"

#include "treetx/minilang/grammar.hpp"

namespace treetx::minilang {

std::vector<NodeId> operator_nodes(const SyntaxTree& tree, const Vocabulary& vocab) {
  const std::int32_t op_type = vocab.types.lookup(sym::kBinopOperator);
  std::vector<NodeId> out;
  for (const auto& node : tree.nodes) {
    if (op_type != kUnknownId && node.type_id == op_type) out.push_back(node.id);
  }
  return out;
}

MutationRecord mutate_operator(const SyntaxTree& tree, const Vocabulary& vocab, Rng& rng) {
  auto candidates = operator_nodes(tree, vocab);
  if (candidates.size() < 2) throw TooFewOperators(candidates.size());

  MutationRecord record;
  record.source_hash = structural_hash(tree);
  record.target_node = candidates[rng.index(candidates.size())];
  const auto& target = tree.node(record.target_node);
  if (!target.token_id) throw Error("operator node without a token");
  auto original = operator_index(vocab.tokens.symbol(*target.token_id));
  if (!original) throw Error("operator node carries unknown operator token");
  record.original_op = static_cast<int>(*original);

  auto pick = rng.index(kOperators.size() - 1);
  if (pick >= *original) ++pick;
  record.corrupted_op = static_cast<int>(pick);

  record.tree = tree;
  record.tree.node(record.target_node).token_id = vocab.tokens.lookup(kOperators[pick]);
  return record;
}

MutationRecord mutate_operator(const SyntaxTree& tree, std::uint64_t seed) {
  Rng rng(seed);
  return mutate_operator(tree, default_vocabulary(), rng);
}

SyntaxTree revert_mutation(const MutationRecord& record, const Vocabulary& vocab) {
  SyntaxTree tree = record.tree;
  tree.node(record.target_node).token_id =
      vocab.tokens.lookup(kOperators.at(static_cast<std::size_t>(record.original_op)));
  return tree;
}

}  // namespace treetx::minilang
