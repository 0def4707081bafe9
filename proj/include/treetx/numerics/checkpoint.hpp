#pragma once

#include <filesystem>

#include <json.hpp>

#include "treetx/numerics/param_store.hpp"

namespace treetx::num {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ParamStore params;
  nlohmann::json metadata;  // free-form, e.g. model config and vocabulary digests
};

/// Writes `<stem>.json` (manifest: name, shape, dtype, byte offset per tensor)
/// and `<stem>.bin` (raw little-endian float64 blob). Returns the manifest path.
std::filesystem::path save_checkpoint(const ParamStore& params, const std::filesystem::path& manifest,
                                      const nlohmann::json& metadata = nlohmann::json::object());

/// Bit-exact inverse of save_checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

}  // namespace treetx::num
