#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "treetx/numerics/graph.hpp"

namespace treetx::num {

// Differentiable operations recorded on a Graph. Matrices are row-major; a
// rank-1 value counts as one row.

Var matmul(Graph& g, Var a, Var b);
/// a b^T
Var matmul_nt(Graph& g, Var a, Var b);
Var add(Graph& g, Var a, Var b);
/// Adds a row vector to every row of `m`.
Var add_row(Graph& g, Var m, Var row);
Var relu(Graph& g, Var a);
Var scale(Graph& g, Var a, double factor);
Var layer_norm(Graph& g, Var x, Var gamma, Var beta, double eps);
/// Columns of `a` followed by columns of `b`; row counts must agree.
Var concat_cols(Graph& g, Var a, Var b);
/// Sum of every element; a 1-element result.
Var sum(Graph& g, Var a);
/// Sum of a * weights elementwise, with `weights` held constant.
Var dot(Graph& g, Var a, const Tensor& weights);

/// How padded rows of a gather are filled. Padded rows never feed real
/// outputs, so the fill only matters to tests that check exactly that.
struct Padding {
  double value = 0.0;
  bool random = false;
  std::uint64_t seed = 0;
  double spread = 1.0;
};

/// Row `rows[i]` of `src`, or a padded row when rows[i] < 0.
Var gather_rows(Graph& g, Var src, std::span<const std::int64_t> rows,
                const Padding& pad = {});

struct RowRef {
  Var src;
  std::int64_t row = -1;  // < 0 marks a padded row
};

/// Builds a matrix from rows of several sources. All sources share a width.
Var gather(Graph& g, std::span<const RowRef> rows, std::size_t cols, const Padding& pad = {});

struct Segment {
  std::size_t begin = 0;
  std::size_t count = 0;
};

/// Per segment: weights = softmax(gates[segment]) and output row =
/// sum_v weights_v * values_v. `gates` is n x 1, `values` is n x d.
Var segment_softmax_pool(Graph& g, Var values, Var gates, std::span<const Segment> segments);

/// Sum over rows of -log softmax(logits[r])[labels[r]].
Var cross_entropy(Graph& g, Var logits, std::span<const std::int64_t> labels);

/// Sum over segments of -log softmax(scores[segment])[target], where `scores`
/// is n x 1 and `targets[s]` is an offset inside segment s.
Var segment_cross_entropy(Graph& g, Var scores, std::span<const Segment> segments,
                          std::span<const std::int64_t> targets);

}  // namespace treetx::num
