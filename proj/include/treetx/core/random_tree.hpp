#pragma once

#include <cstddef>

#include "treetx/core/random.hpp"
#include "treetx/core/syntax_tree.hpp"

namespace treetx {

struct RandomTreeOptions {
  std::size_t nodes = 10;
  std::size_t max_children = 4;  // 0 means unbounded
  std::size_t type_vocab = 8;
  std::size_t token_vocab = 16;
  double token_probability = 0.5;  // chance a node carries a token
};

/// Random recursive tree: node i attaches to a uniformly chosen earlier node
/// that still has room. Ids are renumbered into pre-order.
SyntaxTree random_tree(Rng& rng, const RandomTreeOptions& options);

}  // namespace treetx
