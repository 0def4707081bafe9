#pragma once

#include <map>
#include <string>
#include <vector>

#include "treetx/numerics/tensor.hpp"

namespace treetx::num {

/// Named tensors: learnable parameters plus a disjoint set of fixed buffers.
/// Iteration is sorted by name.
class ParamStore {
 public:
  void add_learnable(const std::string& name, Tensor value);
  void add_fixed(const std::string& name, Tensor value);

  bool contains(const std::string& name) const;
  bool is_learnable(const std::string& name) const { return learnable_.count(name) != 0; }

  const Tensor& get(const std::string& name) const;
  Tensor& learnable(const std::string& name);

  const std::map<std::string, Tensor>& learnable() const { return learnable_; }
  std::map<std::string, Tensor>& learnable() { return learnable_; }
  const std::map<std::string, Tensor>& fixed() const { return fixed_; }

  std::size_t learnable_count() const;

  bool operator==(const ParamStore&) const = default;

 private:
  std::map<std::string, Tensor> learnable_;
  std::map<std::string, Tensor> fixed_;
};

/// Gradients keyed like the learnable half of a ParamStore.
using GradMap = std::map<std::string, Tensor>;

GradMap zeros_like(const ParamStore& params);

}  // namespace treetx::num
