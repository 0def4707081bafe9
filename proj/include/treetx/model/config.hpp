#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "treetx/core/errors.hpp"

namespace treetx::model {

enum class HeadKind { kClassify, kWrongOp, kNodeClassify };

std::string_view to_string(HeadKind kind);
HeadKind parse_head_kind(std::string_view name);

/// Ablations selectable from the command line.
enum class Ablation {
  kNone,
  kPositionEncoding,  // drop the positional term of fraternal attention
  kFraternal,         // drop fraternal attention (and its positions)
  kFraternalKeepPe,   // drop fraternal attention, add positions before parental attention
  kTopDown,           // drop top-down propagation
};

Ablation parse_ablation(std::string_view name);
std::string_view to_string(Ablation ablation);

struct ModelConfig {
  std::size_t dim = 128;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 0;  // 0 means 4 * dim
  std::size_t max_children = 32;

  bool use_position_encoding = true;
  bool use_fraternal_attention = true;
  bool pe_before_parental = false;
  bool use_top_down = true;
  /// Scale scores by the full width (sqrt(d), sqrt(2d)) instead of per head.
  bool full_width_scaling = false;

  HeadKind head = HeadKind::kClassify;
  std::size_t classes = 2;  // tree classes, operator classes or node classes

  std::size_t type_vocab = 0;
  std::size_t token_vocab = 0;
  double layer_norm_eps = 1e-5;

  std::size_t head_dim() const { return dim / heads; }
  std::size_t ffn_width() const { return ffn_hidden == 0 ? 4 * dim : ffn_hidden; }
  bool uses_position_table() const {
    return (use_fraternal_attention && use_position_encoding) ||
           (!use_fraternal_attention && pe_before_parental);
  }

  void apply(Ablation ablation);
  /// Throws Error naming the first violated constraint.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

/// A node has more children than the positional table covers.
class BranchingOverflow : public Error {
 public:
  BranchingOverflow(std::size_t children, std::size_t limit)
      : Error("node has " + std::to_string(children) + " children, positional table holds " +
              std::to_string(limit)) {}
};

}  // namespace treetx::model
