#include "treetx/training/losses.hpp"

#include <algorithm>
#include <cmath>

#include "treetx/core/errors.hpp"
#include "treetx/numerics/ops.hpp"

namespace treetx::training {

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw Error("label " + std::to_string(label) + " out of range for " +
                std::to_string(logits.size()) + " logits");
  }
  const double max = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - max);
  return -(logits[label] - max - std::log(z));
}

double loss_classify(std::span<const double> logits, std::size_t label) {
  return cross_entropy(logits, label);
}

double loss_wrongop(std::span<const double> pointer_logits, std::span<const double> repair_logits,
                    std::size_t target_index, std::size_t repair_label) {
  return cross_entropy(pointer_logits, target_index) + cross_entropy(repair_logits, repair_label);
}

double loss_node_classify(const std::vector<std::vector<double>>& logits,
                          std::span<const std::size_t> labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw Error("node loss needs one label per logits row");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += cross_entropy(logits[i], labels[i]);
  return total / static_cast<double>(logits.size());
}

num::Var classify_loss(num::Graph& g, num::Var logits, std::span<const std::int64_t> labels) {
  if (labels.empty()) throw Error("empty batch");
  return num::scale(g, num::cross_entropy(g, logits, labels), 1.0 / static_cast<double>(labels.size()));
}

WrongOpLoss wrongop_loss(num::Graph& g, const model::PointerScores& pointer, num::Var repair_logits,
                         std::span<const std::int64_t> targets,
                         std::span<const std::int64_t> repair_labels) {
  if (targets.empty() || targets.size() != repair_labels.size()) {
    throw Error("wrongop loss needs one target and one repair label per sample");
  }
  const double inv = 1.0 / static_cast<double>(targets.size());
  WrongOpLoss out;
  out.pointer = num::scale(g, num::segment_cross_entropy(g, pointer.scores, pointer.segments, targets), inv);
  out.repair = num::scale(g, num::cross_entropy(g, repair_logits, repair_labels), inv);
  out.total = num::add(g, out.pointer, out.repair);
  return out;
}

num::Var node_classify_loss(num::Graph& g, num::Var logits, std::span<const std::int64_t> labels) {
  return classify_loss(g, logits, labels);
}

}  // namespace treetx::training
