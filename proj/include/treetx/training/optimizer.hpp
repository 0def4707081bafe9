#pragma once

#include <cstddef>

#include <json.hpp>

#include "treetx/core/errors.hpp"
#include "treetx/numerics/param_store.hpp"

namespace treetx::training {

/// Linear ramp from 0 at step 0 to `base_lr` at `warmup_steps`, constant after.
double lr_schedule(std::size_t step, double base_lr, std::size_t warmup_steps);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  nlohmann::json to_json() const { return {{"beta1", beta1}, {"beta2", beta2}, {"eps", eps}}; }
};

class NonFiniteGradient : public NumericError {
 public:
  NonFiniteGradient(const std::string& param, std::size_t index, double value)
      : NumericError("non-finite gradient " + std::to_string(value) + " at " + param + "[" +
                     std::to_string(index) + "]"),
        param_(param), index_(index) {}
  const std::string& param() const { return param_; }
  std::size_t index() const { return index_; }

 private:
  std::string param_;
  std::size_t index_;
};

/// Adam with bias correction. Moments start at zero.
class Adam {
 public:
  explicit Adam(const num::ParamStore& params, AdamConfig config = {});

  /// One update of every learnable tensor. Gradients missing from `grads`
  /// count as zero. Throws NonFiniteGradient before touching any parameter.
  void step(num::ParamStore& params, const num::GradMap& grads, double lr);

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  num::GradMap m_;
  num::GradMap v_;
  std::size_t steps_ = 0;
};

}  // namespace treetx::training
