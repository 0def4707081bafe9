#pragma once

#include <cstdint>

#include "treetx/model/tree_transformer.hpp"
#include "treetx/numerics/grad_check.hpp"
#include "treetx/training/corpus.hpp"

namespace treetx::training {

/// Central-difference check of the full training loss of `corpus` (every
/// sample in one batch) at freshly initialized parameters.
num::GradCheckReport grad_check_model(const model::ModelConfig& config, const Corpus& corpus,
                                      std::uint64_t seed, double eps = 1e-5,
                                      model::ExecutionMode mode = model::ExecutionMode::kScheduled);

}  // namespace treetx::training
