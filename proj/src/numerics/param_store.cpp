#include "treetx/numerics/param_store.hpp"

#include "treetx/core/errors.hpp"

namespace treetx::num {

void ParamStore::add_learnable(const std::string& name, Tensor value) {
  if (contains(name)) throw Error("duplicate parameter name " + name);
  learnable_.emplace(name, std::move(value));
}

void ParamStore::add_fixed(const std::string& name, Tensor value) {
  if (contains(name)) throw Error("duplicate parameter name " + name);
  fixed_.emplace(name, std::move(value));
}

bool ParamStore::contains(const std::string& name) const {
  return learnable_.count(name) != 0 || fixed_.count(name) != 0;
}

const Tensor& ParamStore::get(const std::string& name) const {
  if (auto it = learnable_.find(name); it != learnable_.end()) return it->second;
  if (auto it = fixed_.find(name); it != fixed_.end()) return it->second;
  throw Error("unknown parameter " + name);
}

Tensor& ParamStore::learnable(const std::string& name) {
  auto it = learnable_.find(name);
  if (it == learnable_.end()) throw Error("unknown learnable parameter " + name);
  return it->second;
}

std::size_t ParamStore::learnable_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : learnable_) n += t.size();
  return n;
}

GradMap zeros_like(const ParamStore& params) {
  GradMap out;
  for (const auto& [name, t] : params.learnable()) out.emplace(name, Tensor(t.shape()));
  return out;
}

}  // namespace treetx::num
