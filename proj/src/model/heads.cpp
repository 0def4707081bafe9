#include "treetx/model/heads.hpp"

#include "treetx/numerics/primitives.hpp"

namespace treetx::model {

using num::Var;

namespace {

Var gather_nodes(BoundParams& p, const Encoding& enc, std::span<const NodeSlot> nodes) {
  std::vector<num::RowRef> rows;
  rows.reserve(nodes.size());
  for (const NodeSlot& n : nodes) {
    if (n.tree >= enc.trees() || enc.row(n.tree, n.node) >= enc.offsets[n.tree + 1]) {
      throw Error("node " + std::to_string(n.node) + " of tree " + std::to_string(n.tree) +
                  " is outside the batch");
    }
    rows.push_back({enc.down, static_cast<std::int64_t>(enc.row(n.tree, n.node))});
  }
  return num::gather(p.graph(), rows, p.config().dim);
}

Var linear(BoundParams& p, Var x, const std::string& prefix) {
  num::Graph& g = p.graph();
  return num::add_row(g, num::matmul(g, x, p[prefix + ".weight"]), p[prefix + ".bias"]);
}

void require_head(const BoundParams& p, HeadKind kind) {
  if (p.config().head != kind) {
    throw Error("model has a " + std::string(to_string(p.config().head)) + " head, not " +
                std::string(to_string(kind)));
  }
}

}  // namespace

Var classify_logits(BoundParams& p, Var pooled) {
  require_head(p, HeadKind::kClassify);
  return linear(p, pooled, "head.classify");
}

PointerScores pointer_scores(BoundParams& p, const Encoding& enc,
                             const std::vector<std::vector<NodeId>>& candidates) {
  require_head(p, HeadKind::kWrongOp);
  if (candidates.size() != enc.trees()) throw Error("pointer: one candidate list per tree expected");
  PointerScores out;
  std::vector<NodeSlot> nodes;
  for (std::size_t t = 0; t < candidates.size(); ++t) {
    if (candidates[t].empty()) throw EmptyCandidateSet(t);
    out.segments.push_back({nodes.size(), candidates[t].size()});
    for (NodeId id : candidates[t]) nodes.push_back({t, id});
  }
  out.scores = num::matmul(p.graph(), gather_nodes(p, enc, nodes), p["head.pointer.weight"]);
  return out;
}

Var repair_logits(BoundParams& p, const Encoding& enc, std::span<const NodeSlot> nodes) {
  require_head(p, HeadKind::kWrongOp);
  return linear(p, gather_nodes(p, enc, nodes), "head.repair");
}

Var node_logits(BoundParams& p, const Encoding& enc, std::span<const NodeSlot> nodes) {
  require_head(p, HeadKind::kNodeClassify);
  return linear(p, gather_nodes(p, enc, nodes), "head.node");
}

std::vector<double> segment_softmax(const num::Tensor& scores, std::span<const num::Segment> segments) {
  std::vector<double> out(scores.size(), 0.0);
  for (const num::Segment& s : segments) {
    std::span<double> w(out.data() + s.begin, s.count);
    for (std::size_t i = 0; i < s.count; ++i) w[i] = scores[s.begin + i];
    num::softmax_inplace(w);
  }
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw Error("argmax of an empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace treetx::model
