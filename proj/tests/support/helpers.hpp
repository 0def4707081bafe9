#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "treetx/core/random.hpp"
#include "treetx/core/random_tree.hpp"
#include "treetx/core/syntax_tree.hpp"
#include "treetx/model/config.hpp"
#include "treetx/numerics/grad_check.hpp"
#include "treetx/numerics/tensor.hpp"

namespace treetx::testing {

inline SyntaxNode leaf(NodeId id, std::int32_t type = 1, std::optional<std::int32_t> token = {}) {
  return SyntaxNode{id, type, token, {}};
}

/// 0 -> 1 -> ... -> n-1
inline SyntaxTree chain(std::size_t n) {
  SyntaxTree t;
  for (std::size_t i = 0; i < n; ++i) {
    SyntaxNode node = leaf(static_cast<NodeId>(i), static_cast<std::int32_t>(i % 3));
    if (i + 1 < n) node.children = {static_cast<NodeId>(i + 1)};
    t.nodes.push_back(node);
  }
  return t;
}

/// Root 0 with leaves 1..k.
inline SyntaxTree star(std::size_t k) {
  SyntaxTree t;
  t.nodes.push_back(leaf(0, 0));
  for (std::size_t i = 1; i <= k; ++i) {
    t.nodes[0].children.push_back(static_cast<NodeId>(i));
    t.nodes.push_back(leaf(static_cast<NodeId>(i), 1, static_cast<std::int32_t>(i)));
  }
  return t;
}

/// Complete binary tree of `levels` levels, pre-order ids.
inline SyntaxTree balanced_binary(std::size_t levels) {
  SyntaxTree t;
  std::function<NodeId(std::size_t)> build = [&](std::size_t level) -> NodeId {
    const NodeId id = static_cast<NodeId>(t.nodes.size());
    t.nodes.push_back(leaf(id, static_cast<std::int32_t>(level)));
    if (level + 1 < levels) {
      const NodeId a = build(level + 1);
      const NodeId b = build(level + 1);
      t.nodes[id].children = {a, b};
    }
    return id;
  };
  build(0);
  return t;
}

inline SyntaxTree random_tree(std::uint64_t seed, std::size_t nodes, std::size_t max_children = 4,
                              std::size_t type_vocab = 8, std::size_t token_vocab = 16) {
  Rng rng(seed);
  RandomTreeOptions o;
  o.nodes = nodes;
  o.max_children = max_children;
  o.type_vocab = type_vocab;
  o.token_vocab = token_vocab;
  return treetx::random_tree(rng, o);
}

inline model::ModelConfig small_config(std::size_t dim = 8, std::size_t heads = 2,
                                       model::HeadKind head = model::HeadKind::kClassify) {
  model::ModelConfig c;
  c.dim = dim;
  c.heads = heads;
  c.max_children = 8;
  c.head = head;
  c.classes = 3;
  c.type_vocab = 8;
  c.token_vocab = 16;
  return c;
}

inline double max_abs_diff(const num::Tensor& a, const num::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Rounding of the loss puts roughly ulp(L) / (2 eps), about 1e-11 at
/// eps 1e-5, into every central difference.
constexpr double kFiniteDifferenceNoise = 1e-10;

/// Full-model gradient check verdict: empty when every coordinate meets the
/// relative tolerance or agrees to within the finite-difference noise.
/// Otherwise names the first offending coordinate.
inline std::string grad_check_problem(const num::GradCheckReport& r, double tol = 1e-4) {
  for (const auto& e : r.entries) {
    if (e.relative_error < tol) continue;
    if (std::abs(e.analytic - e.numeric) < kFiniteDifferenceNoise) continue;
    char buf[160];
    std::snprintf(buf, sizeof buf, "[%zu] analytic %.6e numeric %.6e", e.index, e.analytic, e.numeric);
    return e.param + buf;
  }
  return "";
}

}  // namespace treetx::testing
