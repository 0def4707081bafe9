#pragma once

#include <cstdint>
#include <vector>

#include "treetx/core/syntax_tree.hpp"

namespace treetx::sched {

/// Attention score cells a batch needs.
///   attention_cells      = sum over non-leaf nodes of k^2 (fraternal attention)
///   full_attention_cells = sum over trees of N^2 (sequence self-attention)
struct CostReport {
  std::uint64_t attention_cells = 0;
  std::uint64_t full_attention_cells = 0;
  std::uint64_t parental_cells = 0;  // sum of k, one query per parent
  std::uint64_t nodes = 0;
};

CostReport cost_report(const std::vector<SyntaxTree>& batch);

}  // namespace treetx::sched
