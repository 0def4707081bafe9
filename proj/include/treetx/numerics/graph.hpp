#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "treetx/numerics/param_store.hpp"
#include "treetx/numerics/tensor.hpp"

namespace treetx::num {

/// Handle to a value recorded on a Graph.
struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const { return id != std::numeric_limits<std::uint32_t>::max(); }
  bool operator==(const Var&) const = default;
};

/// Cells of attention scores materialized, counted once per head.
struct AttentionStats {
  std::size_t fraternal_cells = 0;
  std::size_t parental_cells = 0;
  std::size_t other_cells = 0;
  std::size_t peak_call_cells = 0;  // largest single attention call
};

/// Reverse-mode tape. Values and gradients live on the graph until it is
/// destroyed; one graph per forward/backward pass. Not thread-safe; use one
/// graph per thread.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, Var self)>;

  Var constant(Tensor value);
  /// A leaf that receives gradients but is not a parameter.
  Var input(Tensor value);
  /// Binds a store entry. Learnable entries receive gradients, fixed ones do
  /// not. Repeated calls with the same name return the same Var.
  Var parameter(const ParamStore& store, const std::string& name);

  /// Records an op. `backward` runs only if some input requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  /// Gradient of the last backward pass; zeros if nothing flowed into `v`.
  Tensor grad(Var v) const;
  bool has_grad(Var v) const { return nodes_.at(v.id).has_grad; }
  /// Mutable gradient buffer for use inside backward functions (zero-initialized).
  Tensor& grad_mut(Var v);

  void backward(Var scalar);
  /// Backward from an arbitrary seed gradient of `out`'s shape.
  void backward(Var out, const Tensor& seed);

  /// Adds gradients of bound learnable parameters into `grads`.
  void accumulate_param_grads(GradMap& grads) const;

  AttentionStats& stats() { return stats_; }
  const AttentionStats& stats() const { return stats_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  void run_backward(std::uint32_t from);

  std::deque<Node> nodes_;
  std::map<std::string, Var> params_;
  AttentionStats stats_;
};

}  // namespace treetx::num
