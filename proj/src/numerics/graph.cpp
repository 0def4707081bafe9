#include "treetx/numerics/graph.hpp"

#include "treetx/core/errors.hpp"

namespace treetx::num {

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::input(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, {}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::parameter(const ParamStore& store, const std::string& name) {
  if (auto it = params_.find(name); it != params_.end()) return it->second;
  Var v = store.is_learnable(name) ? input(store.get(name)) : constant(store.get(name));
  params_.emplace(name, v);
  return v;
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(backward) : BackwardFn{}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(backward) : BackwardFn{}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor Graph::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  return node.has_grad ? node.grad : Tensor(node.value.shape());
}

Tensor& Graph::grad_mut(Var v) {
  Node& node = nodes_.at(v.id);
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return node.grad;
}

void Graph::backward(Var scalar) {
  if (value(scalar).size() != 1) {
    throw ShapeError("backward(scalar) needs a single-element value, got " +
                     value(scalar).shape_string());
  }
  backward(scalar, Tensor(value(scalar).shape(), 1.0));
}

void Graph::backward(Var out, const Tensor& seed) {
  if (!seed.same_shape(value(out))) {
    throw ShapeError("backward seed " + seed.shape_string() + " vs value " +
                     value(out).shape_string());
  }
  for (auto& node : nodes_) {
    node.has_grad = false;
    node.grad = Tensor();
  }
  grad_mut(out) = seed;
  run_backward(out.id);
}

void Graph::run_backward(std::uint32_t from) {
  for (std::int64_t i = from; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.has_grad && node.backward) node.backward(*this, Var{static_cast<std::uint32_t>(i)});
  }
}

void Graph::accumulate_param_grads(GradMap& grads) const {
  for (const auto& [name, var] : params_) {
    const Node& node = nodes_.at(var.id);
    if (!node.requires_grad || !node.has_grad) continue;
    auto it = grads.find(name);
    if (it == grads.end()) {
      grads.emplace(name, node.grad);
      continue;
    }
    Tensor& dst = it->second;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += node.grad[k];
  }
}

}  // namespace treetx::num
