#pragma once

#include <cstdint>
#include <vector>

#include "treetx/core/errors.hpp"
#include "treetx/core/random.hpp"
#include "treetx/core/syntax_tree.hpp"
#include "treetx/core/vocabulary.hpp"

namespace treetx::minilang {

class TooFewOperators : public Error {
 public:
  explicit TooFewOperators(std::size_t found)
      : Error("tree has " + std::to_string(found) + " binary operators, need at least 2"),
        found_(found) {}
  std::size_t found() const { return found_; }

 private:
  std::size_t found_;
};

struct MutationRecord {
  SyntaxTree tree;         // corrupted tree
  NodeId target_node = 0;  // the operator leaf that was changed
  int original_op = 0;     // index into kOperators, the repair label
  int corrupted_op = 0;
  std::uint64_t source_hash = 0;  // structural_hash of the pristine tree
};

/// Binary-operator leaves in id order. These are the pointer candidates.
std::vector<NodeId> operator_nodes(const SyntaxTree& tree, const Vocabulary& vocab);

/// Picks one operator leaf uniformly and replaces its token with a uniformly
/// chosen different operator. Throws TooFewOperators below two operators.
MutationRecord mutate_operator(const SyntaxTree& tree, const Vocabulary& vocab, Rng& rng);
MutationRecord mutate_operator(const SyntaxTree& tree, std::uint64_t seed);

/// Undoes the corruption recorded in `record`.
SyntaxTree revert_mutation(const MutationRecord& record, const Vocabulary& vocab);

}  // namespace treetx::minilang
