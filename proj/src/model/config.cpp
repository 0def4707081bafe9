#include "treetx/model/config.hpp"

namespace treetx::model {

std::string_view to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::kClassify: return "classify";
    case HeadKind::kWrongOp: return "wrongop";
    case HeadKind::kNodeClassify: return "node";
  }
  return "classify";
}

HeadKind parse_head_kind(std::string_view name) {
  if (name == "classify") return HeadKind::kClassify;
  if (name == "wrongop") return HeadKind::kWrongOp;
  if (name == "node") return HeadKind::kNodeClassify;
  throw Error("unknown task '" + std::string(name) + "' (expected classify, wrongop or node)");
}

Ablation parse_ablation(std::string_view name) {
  if (name.empty() || name == "none") return Ablation::kNone;
  if (name == "pe") return Ablation::kPositionEncoding;
  if (name == "fraternal") return Ablation::kFraternal;
  if (name == "fraternal-keep-pe") return Ablation::kFraternalKeepPe;
  if (name == "topdown") return Ablation::kTopDown;
  throw Error("unknown ablation '" + std::string(name) +
              "' (expected pe, fraternal, fraternal-keep-pe or topdown)");
}

std::string_view to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kNone: return "none";
    case Ablation::kPositionEncoding: return "pe";
    case Ablation::kFraternal: return "fraternal";
    case Ablation::kFraternalKeepPe: return "fraternal-keep-pe";
    case Ablation::kTopDown: return "topdown";
  }
  return "none";
}

void ModelConfig::apply(Ablation ablation) {
  switch (ablation) {
    case Ablation::kNone: break;
    case Ablation::kPositionEncoding: use_position_encoding = false; break;
    case Ablation::kFraternal:
      use_fraternal_attention = false;
      pe_before_parental = false;
      break;
    case Ablation::kFraternalKeepPe:
      use_fraternal_attention = false;
      pe_before_parental = true;
      break;
    case Ablation::kTopDown: use_top_down = false; break;
  }
}

void ModelConfig::validate() const {
  if (dim == 0 || heads == 0) throw Error("dim and heads must be positive");
  if (dim % heads != 0) {
    throw Error("dim " + std::to_string(dim) + " is not divisible by heads " + std::to_string(heads));
  }
  if (dim % 2 != 0) throw Error("dim must be even (type and token embeddings take half each)");
  if (max_children == 0) throw Error("max_children must be positive");
  if (classes == 0) throw Error("head needs at least one class");
  if (type_vocab == 0 || token_vocab == 0) throw Error("vocabulary sizes must be set");
  if (!(layer_norm_eps > 0.0)) throw Error("layer_norm_eps must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"dim", dim},
          {"heads", heads},
          {"ffn_hidden", ffn_hidden},
          {"max_children", max_children},
          {"use_position_encoding", use_position_encoding},
          {"use_fraternal_attention", use_fraternal_attention},
          {"pe_before_parental", pe_before_parental},
          {"use_top_down", use_top_down},
          {"full_width_scaling", full_width_scaling},
          {"head", std::string(to_string(head))},
          {"classes", classes},
          {"type_vocab", type_vocab},
          {"token_vocab", token_vocab},
          {"layer_norm_eps", layer_norm_eps}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim = j.at("dim");
  c.heads = j.at("heads");
  c.ffn_hidden = j.at("ffn_hidden");
  c.max_children = j.at("max_children");
  c.use_position_encoding = j.at("use_position_encoding");
  c.use_fraternal_attention = j.at("use_fraternal_attention");
  c.pe_before_parental = j.at("pe_before_parental");
  c.use_top_down = j.at("use_top_down");
  c.full_width_scaling = j.at("full_width_scaling");
  c.head = parse_head_kind(j.at("head").get<std::string>());
  c.classes = j.at("classes");
  c.type_vocab = j.at("type_vocab");
  c.token_vocab = j.at("token_vocab");
  c.layer_norm_eps = j.at("layer_norm_eps");
  c.validate();
  return c;
}

}  // namespace treetx::model
