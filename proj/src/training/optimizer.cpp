#include "treetx/training/optimizer.hpp"

#include <cmath>

namespace treetx::training {

double lr_schedule(std::size_t step, double base_lr, std::size_t warmup_steps) {
  if (!(base_lr > 0.0)) throw Error("base_lr must be positive");
  if (warmup_steps == 0) throw Error("warmup_steps must be at least 1");
  if (step >= warmup_steps) return base_lr;
  return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

Adam::Adam(const num::ParamStore& params, AdamConfig config)
    : config_(config), m_(num::zeros_like(params)), v_(num::zeros_like(params)) {}

void Adam::step(num::ParamStore& params, const num::GradMap& grads, double lr) {
  for (const auto& [name, g] : grads) {
    if (!params.is_learnable(name)) throw Error("gradient for unknown parameter '" + name + "'");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) throw NonFiniteGradient(name, i, g[i]);
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (auto& [name, w] : params.learnable()) {
    auto it = grads.find(name);
    num::Tensor& m = m_.at(name);
    num::Tensor& v = v_.at(name);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = it == grads.end() ? 0.0 : it->second[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      if (lr == 0.0) continue;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace treetx::training
