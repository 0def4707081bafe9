#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treetx/model/config.hpp"
#include "treetx/numerics/param_store.hpp"

namespace treetx::model {

enum class InitRule { kFanIn, kEmbedding, kZeros, kOnes };

struct ParamSpec {
  std::string name;
  std::vector<std::size_t> shape;
  InitRule rule = InitRule::kFanIn;
};

/// Every learnable tensor the configuration uses, sorted by name.
std::vector<ParamSpec> param_specs(const ModelConfig& config);

/// Fixed sinusoidal position vectors, one row per child slot.
num::Tensor sinusoidal_table(std::size_t positions, std::size_t dim);

/// Seeded parameters: weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), embeddings
/// U(-1, 1), biases and layer-norm shifts 0, layer-norm gains 1. Values are
/// drawn from one stream in name order.
num::ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

}  // namespace treetx::model
