#include "treetx/model/init.hpp"

#include <algorithm>
#include <cmath>

#include "treetx/core/random.hpp"

namespace treetx::model {

namespace {

void add_linear(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in,
                std::size_t outw, bool bias) {
  out.push_back({prefix + ".weight", {in, outw}, InitRule::kFanIn});
  if (bias) out.push_back({prefix + ".bias", {outw}, InitRule::kZeros});
}

void add_norm(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
  out.push_back({prefix + ".gamma", {d}, InitRule::kOnes});
  out.push_back({prefix + ".beta", {d}, InitRule::kZeros});
}

void add_ffn(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d,
             std::size_t hidden) {
  out.push_back({prefix + ".w1", {d, hidden}, InitRule::kFanIn});
  out.push_back({prefix + ".b1", {hidden}, InitRule::kZeros});
  out.push_back({prefix + ".w2", {hidden, d}, InitRule::kFanIn});
  out.push_back({prefix + ".b2", {d}, InitRule::kZeros});
}

void add_attention(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
  for (const char* part : {"query", "key", "value", "output"}) {
    out.push_back({prefix + "." + part, {d, d}, InitRule::kFanIn});
  }
}

}  // namespace

std::vector<ParamSpec> param_specs(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.dim;
  std::vector<ParamSpec> out;
  out.push_back({"embed.type", {c.type_vocab, d / 2}, InitRule::kEmbedding});
  out.push_back({"embed.token", {c.token_vocab + 1, d / 2}, InitRule::kEmbedding});

  if (c.use_fraternal_attention) {
    add_attention(out, "up.fraternal", d);
    if (c.use_position_encoding) {
      out.push_back({"up.fraternal.pos_query", {d, d}, InitRule::kFanIn});
      out.push_back({"up.fraternal.pos_key", {d, d}, InitRule::kFanIn});
    }
    add_norm(out, "up.ln_fraternal", d);
  }
  add_attention(out, "up.parental", d);
  add_norm(out, "up.ln_parental", d);
  add_ffn(out, "up.ffn", d, c.ffn_width());
  add_norm(out, "up.ln_ffn", d);

  if (c.use_top_down) {
    add_norm(out, "down.ln_sum", d);
    add_ffn(out, "down.ffn", d, c.ffn_width());
    add_norm(out, "down.ln_ffn", d);
  }

  switch (c.head) {
    case HeadKind::kClassify:
      out.push_back({"pool.gate", {d, 1}, InitRule::kFanIn});
      add_linear(out, "head.classify", d, c.classes, true);
      break;
    case HeadKind::kWrongOp:
      add_linear(out, "head.pointer", d, 1, false);
      add_linear(out, "head.repair", d, c.classes, true);
      break;
    case HeadKind::kNodeClassify:
      add_linear(out, "head.node", d, c.classes, true);
      break;
  }
  std::sort(out.begin(), out.end(),
            [](const ParamSpec& a, const ParamSpec& b) { return a.name < b.name; });
  return out;
}

num::Tensor sinusoidal_table(std::size_t positions, std::size_t dim) {
  num::Tensor t = num::Tensor::matrix(positions, dim);
  for (std::size_t pos = 0; pos < positions; ++pos) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      t.at(pos, i) = std::sin(angle);
      if (i + 1 < dim) t.at(pos, i + 1) = std::cos(angle);
    }
  }
  return t;
}

num::ParamStore init_params(const ModelConfig& config, std::uint64_t seed) {
  num::ParamStore store;
  Rng rng(seed);
  for (const ParamSpec& spec : param_specs(config)) {
    num::Tensor t(spec.shape);
    switch (spec.rule) {
      case InitRule::kFanIn: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape.front()));
        for (double& v : t.data()) v = rng.uniform(-bound, bound);
        break;
      }
      case InitRule::kEmbedding:
        for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
        break;
      case InitRule::kZeros: break;
      case InitRule::kOnes: t.fill(1.0); break;
    }
    store.add_learnable(spec.name, std::move(t));
  }
  if (config.uses_position_table()) {
    store.add_fixed("position_table", sinusoidal_table(config.max_children, config.dim));
  }
  return store;
}

}  // namespace treetx::model
