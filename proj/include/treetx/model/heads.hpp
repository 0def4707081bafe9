#pragma once

#include <span>
#include <vector>

#include "treetx/model/tree_transformer.hpp"

namespace treetx::model {

class EmptyCandidateSet : public Error {
 public:
  explicit EmptyCandidateSet(std::size_t tree)
      : Error("tree " + std::to_string(tree) + " has no pointer candidates"), tree_(tree) {}
  std::size_t tree() const { return tree_; }

 private:
  std::size_t tree_;
};

/// A node of a batch, addressed by tree index and node id.
struct NodeSlot {
  std::size_t tree = 0;
  NodeId node = 0;
};

/// Pooled tree vectors (batch x d) to class logits.
num::Var classify_logits(BoundParams& p, num::Var pooled);

/// Pointer scores: one row per candidate, candidates of tree t stacked in
/// segment t. The softmax runs inside each segment only.
struct PointerScores {
  num::Var scores;  // total candidates x 1
  std::vector<num::Segment> segments;
};

PointerScores pointer_scores(BoundParams& p, const Encoding& enc,
                             const std::vector<std::vector<NodeId>>& candidates);

/// Operator logits from the h_down of one node per row.
num::Var repair_logits(BoundParams& p, const Encoding& enc, std::span<const NodeSlot> nodes);

/// Class logits for labeled nodes, from their h_down.
num::Var node_logits(BoundParams& p, const Encoding& enc, std::span<const NodeSlot> nodes);

/// Softmax of each segment of a column of scores.
std::vector<double> segment_softmax(const num::Tensor& scores, std::span<const num::Segment> segments);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace treetx::model
