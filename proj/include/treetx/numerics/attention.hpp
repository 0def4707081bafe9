#pragma once

#include <optional>
#include <span>
#include <vector>

#include "treetx/numerics/graph.hpp"

namespace treetx::num {

/// One independent attention problem inside a batched call: queries
/// [q_begin, q_begin + q_count) attend over keys/values [kv_begin, kv_begin + kv_count).
/// Rows outside every segment are padding; they are skipped and their output is zero.
struct AttentionSegment {
  std::size_t q_begin = 0;
  std::size_t q_count = 0;
  std::size_t kv_begin = 0;
  std::size_t kv_count = 0;
};

enum class AttentionKind { kFraternal, kParental, kOther };

struct AttentionSpec {
  std::size_t heads = 1;
  double content_scale = 1.0;  // multiplies q . k per head
  double bias_scale = 1.0;     // multiplies bias[m][j]
  AttentionKind kind = AttentionKind::kOther;
  /// When set, receives the softmax weights laid out [segment][head][m][j].
  std::vector<double>* capture = nullptr;
};

/// Scaled dot-product attention over already-projected rows, split into
/// `heads` equal column blocks:
///   score_h(m, j) = content_scale * q_m,h . k_j,h + bias_scale * bias(m, j)
///   out_m,h = sum_j softmax_j(score_h(m, .)) v_j,h
/// `bias`, when given, is indexed by positions inside the segment and is
/// shared by every head. Score cells are counted once per head in the graph's
/// AttentionStats.
Var attention(Graph& g, Var q, Var k, Var v, std::span<const AttentionSegment> segments,
              const AttentionSpec& spec, std::optional<Var> bias = std::nullopt);

}  // namespace treetx::num
