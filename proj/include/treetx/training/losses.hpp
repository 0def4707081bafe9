#pragma once

#include <span>
#include <vector>

#include "treetx/model/heads.hpp"
#include "treetx/numerics/graph.hpp"

namespace treetx::training {

// Plain cross-entropy values, for evaluation and tests.

/// -log softmax(logits)[label]
double cross_entropy(std::span<const double> logits, std::size_t label);
double loss_classify(std::span<const double> logits, std::size_t label);
/// CE over the candidate scores plus CE over the repair logits, unweighted.
double loss_wrongop(std::span<const double> pointer_logits, std::span<const double> repair_logits,
                    std::size_t target_index, std::size_t repair_label);
/// Mean CE over the labeled nodes; one logits row per node.
double loss_node_classify(const std::vector<std::vector<double>>& logits,
                          std::span<const std::size_t> labels);

// Batch losses on a graph. Each is a mean over the batch's samples.

num::Var classify_loss(num::Graph& g, num::Var logits, std::span<const std::int64_t> labels);

struct WrongOpLoss {
  num::Var total;
  num::Var pointer;
  num::Var repair;
};

/// `targets[s]` is the target's offset inside candidate segment s.
WrongOpLoss wrongop_loss(num::Graph& g, const model::PointerScores& pointer, num::Var repair_logits,
                         std::span<const std::int64_t> targets,
                         std::span<const std::int64_t> repair_labels);

/// Mean CE over every labeled node of the batch.
num::Var node_classify_loss(num::Graph& g, num::Var logits, std::span<const std::int64_t> labels);

}  // namespace treetx::training
