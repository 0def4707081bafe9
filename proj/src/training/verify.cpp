#include "treetx/training/verify.hpp"

#include <numeric>

#include "treetx/model/init.hpp"
#include "treetx/training/trainer.hpp"

namespace treetx::training {

num::GradCheckReport grad_check_model(const model::ModelConfig& config, const Corpus& corpus,
                                      std::uint64_t seed, double eps, model::ExecutionMode mode) {
  const num::ParamStore params = model::init_params(config, seed);
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), 0);
  model::ForwardOptions options;
  options.mode = mode;
  auto objective = [&](const num::ParamStore& store, num::GradMap* grads) {
    num::Graph g;
    model::BoundParams p(g, store, config, grads != nullptr);
    num::Var loss = batch_loss(p, corpus, all, options);
    if (grads) {
      g.backward(loss);
      g.accumulate_param_grads(*grads);
    }
    return g.value(loss)[0];
  };
  return num::grad_check(objective, params, eps);
}

}  // namespace treetx::training
