#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treetx/core/syntax_tree.hpp"
#include "treetx/model/config.hpp"
#include "treetx/numerics/graph.hpp"
#include "treetx/numerics/ops.hpp"

namespace treetx::model {

enum class ExecutionMode {
  kScheduled,  // level-synchronous batches across every tree
  kNaive,      // one unit application per node, post-order then pre-order
};

struct ForwardOptions {
  ExecutionMode mode = ExecutionMode::kScheduled;
  /// Fill for masked child slots of padded buckets.
  num::Padding padding;
};

/// Parameters of one store bound onto one graph. Bound lazily and cached.
class BoundParams {
 public:
  /// With `trainable` false every tensor enters the graph as a constant and
  /// no backward closures are kept.
  BoundParams(num::Graph& graph, const num::ParamStore& store, const ModelConfig& config,
              bool trainable = true);

  num::Var operator[](const std::string& name);
  /// (p U^Q)(p U^K)^T over all slot pairs, max_children x max_children.
  num::Var position_scores();

  num::Graph& graph() { return *graph_; }
  const ModelConfig& config() const { return config_; }
  const num::ParamStore& store() const { return *store_; }

 private:
  num::Graph* graph_;
  const num::ParamStore* store_;
  ModelConfig config_;
  bool trainable_;
  std::map<std::string, num::Var> bound_;
  std::optional<num::Var> position_scores_;
};

/// Node states for a batch. Row r of every matrix belongs to node
/// r - offsets[t] of tree t.
struct Encoding {
  num::Var embed;  // initial embeddings e
  num::Var up;     // bottom-up states
  num::Var down;   // top-down states (equal to `up` without top-down)
  std::vector<std::size_t> offsets;

  std::size_t row(std::size_t tree, NodeId node) const { return offsets[tree] + node; }
  std::size_t trees() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t rows() const { return offsets.empty() ? 0 : offsets.back(); }
};

/// Type embedding (d/2) next to token embedding (d/2), one row per node.
num::Var embed_nodes(BoundParams& p, const std::vector<const SyntaxTree*>& batch);

Encoding encode(BoundParams& p, const std::vector<const SyntaxTree*>& batch,
                const ForwardOptions& options = {});
Encoding encode(BoundParams& p, const SyntaxTree& tree, const ForwardOptions& options = {});

/// Global attention pooling, one row per tree.
num::Var pool(BoundParams& p, const Encoding& encoding);

// Single-instance units. Inputs are rows of width d.

/// Projected multi-head attention using `<prefix>.{query,key,value,output}`.
num::Var multi_head_attention(BoundParams& p, const std::string& prefix, num::Var queries,
                              num::Var keys, num::Var values);

/// Self-attention among siblings (output projection applied, no residual).
/// `weights`, when set, receives the softmax weights laid out [head][m][j].
num::Var fraternal_attention(BoundParams& p, num::Var siblings,
                             std::vector<double>* weights = nullptr);

/// h_up of a parent from its initial embedding (1 x d) and its children's states (k x d).
num::Var bottom_up_step(BoundParams& p, num::Var parent_embedding, num::Var children_up);

/// h_down of k children from the parent's h_down (1 x d) and their h_up (k x d).
num::Var top_down_step(BoundParams& p, num::Var parent_down, num::Var children_up);

}  // namespace treetx::model
