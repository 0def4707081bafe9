#include "treetx/model/tree_transformer.hpp"

#include <cmath>

#include "treetx/numerics/attention.hpp"
#include "treetx/scheduler/schedule.hpp"

namespace treetx::model {

using num::AttentionSegment;
using num::RowRef;
using num::Var;

BoundParams::BoundParams(num::Graph& graph, const num::ParamStore& store, const ModelConfig& config,
                         bool trainable)
    : graph_(&graph), store_(&store), config_(config), trainable_(trainable) {
  config_.validate();
}

Var BoundParams::operator[](const std::string& name) {
  if (auto it = bound_.find(name); it != bound_.end()) return it->second;
  if (!store_->contains(name)) throw Error("parameter '" + name + "' missing from the store");
  Var v = trainable_ ? graph_->parameter(*store_, name) : graph_->constant(store_->get(name));
  bound_.emplace(name, v);
  return v;
}

Var BoundParams::position_scores() {
  if (!position_scores_) {
    num::Graph& g = *graph_;
    Var table = (*this)["position_table"];
    Var pq = num::matmul(g, table, (*this)["up.fraternal.pos_query"]);
    Var pk = num::matmul(g, table, (*this)["up.fraternal.pos_key"]);
    position_scores_ = num::matmul_nt(g, pq, pk);
  }
  return *position_scores_;
}

namespace {

struct Scales {
  double fraternal;
  double parental;
};

Scales scales(const ModelConfig& c) {
  const double width = static_cast<double>(c.full_width_scaling ? c.dim : c.head_dim());
  return {1.0 / std::sqrt(2.0 * width), 1.0 / std::sqrt(width)};
}

Var norm(BoundParams& p, Var x, const std::string& prefix) {
  return num::layer_norm(p.graph(), x, p[prefix + ".gamma"], p[prefix + ".beta"],
                         p.config().layer_norm_eps);
}

Var ffn(BoundParams& p, Var x, const std::string& prefix) {
  num::Graph& g = p.graph();
  Var hidden = num::relu(g, num::add_row(g, num::matmul(g, x, p[prefix + ".w1"]), p[prefix + ".b1"]));
  return num::add_row(g, num::matmul(g, hidden, p[prefix + ".w2"]), p[prefix + ".b2"]);
}

// Child slots of one parent inside a stacked child matrix.
struct Slots {
  std::size_t begin = 0;
  std::size_t count = 0;
};

void check_branching(const ModelConfig& c, std::size_t children) {
  if (c.uses_position_table() && children > c.max_children) {
    throw BranchingOverflow(children, c.max_children);
  }
}

Var fraternal_block(BoundParams& p, Var x, const std::vector<Slots>& slots,
                    std::vector<double>* capture) {
  num::Graph& g = p.graph();
  const ModelConfig& c = p.config();
  std::vector<AttentionSegment> segments;
  segments.reserve(slots.size());
  for (const Slots& s : slots) {
    check_branching(c, s.count);
    segments.push_back({s.begin, s.count, s.begin, s.count});
  }
  Var q = num::matmul(g, x, p["up.fraternal.query"]);
  Var k = num::matmul(g, x, p["up.fraternal.key"]);
  Var v = num::matmul(g, x, p["up.fraternal.value"]);
  num::AttentionSpec spec;
  spec.heads = c.heads;
  spec.content_scale = scales(c).fraternal;
  spec.bias_scale = scales(c).fraternal;
  spec.kind = num::AttentionKind::kFraternal;
  spec.capture = capture;
  std::optional<Var> bias;
  if (c.use_position_encoding) bias = p.position_scores();
  Var mixed = num::attention(g, q, k, v, segments, spec, bias);
  return num::matmul(g, mixed, p["up.fraternal.output"]);
}

// Position vectors for every real slot, zero rows for padding.
Var slot_positions(BoundParams& p, const std::vector<Slots>& slots, std::size_t rows) {
  const num::Tensor& table = p.store().get("position_table");
  num::Tensor out = num::Tensor::matrix(rows, p.config().dim);
  for (const Slots& s : slots) {
    check_branching(p.config(), s.count);
    for (std::size_t m = 0; m < s.count; ++m) {
      auto src = table.row(m);
      std::copy(src.begin(), src.end(), out.row(s.begin + m).begin());
    }
  }
  return p.graph().constant(std::move(out));
}

// Bottom-up unit for n parents: `parents` holds their embeddings (n x d),
// `children` the stacked child states, `slots[i]` where parent i's children sit.
Var bottom_up_unit(BoundParams& p, Var parents, Var children, const std::vector<Slots>& slots) {
  num::Graph& g = p.graph();
  const ModelConfig& c = p.config();
  Var siblings = children;
  if (c.use_fraternal_attention) {
    Var mixed = fraternal_block(p, children, slots, nullptr);
    siblings = norm(p, num::add(g, mixed, children), "up.ln_fraternal");
  } else if (c.pe_before_parental) {
    siblings = num::add(g, children, slot_positions(p, slots, g.value(children).rows()));
  }

  std::vector<AttentionSegment> segments;
  segments.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    segments.push_back({i, 1, slots[i].begin, slots[i].count});
  }
  Var q = num::matmul(g, parents, p["up.parental.query"]);
  Var k = num::matmul(g, siblings, p["up.parental.key"]);
  Var v = num::matmul(g, siblings, p["up.parental.value"]);
  num::AttentionSpec spec;
  spec.heads = c.heads;
  spec.content_scale = scales(c).parental;
  spec.kind = num::AttentionKind::kParental;
  Var attended = num::matmul(g, num::attention(g, q, k, v, segments, spec), p["up.parental.output"]);
  Var a = norm(p, num::add(g, attended, parents), "up.ln_parental");
  return norm(p, num::add(g, ffn(p, a, "up.ffn"), a), "up.ln_ffn");
}

Var top_down_unit(BoundParams& p, Var summed) {
  num::Graph& g = p.graph();
  Var a = norm(p, summed, "down.ln_sum");
  return norm(p, num::add(g, ffn(p, a, "down.ffn"), a), "down.ln_ffn");
}

struct BatchIndex {
  std::vector<std::size_t> offsets;
  std::vector<std::vector<std::optional<NodeId>>> parents;
};

BatchIndex index_batch(const std::vector<const SyntaxTree*>& batch) {
  BatchIndex idx;
  idx.offsets.push_back(0);
  for (const SyntaxTree* t : batch) {
    idx.offsets.push_back(idx.offsets.back() + t->size());
    idx.parents.push_back(parents(*t));
  }
  return idx;
}

std::vector<RowRef> refs_to(Var src, std::size_t n) {
  std::vector<RowRef> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {src, static_cast<std::int64_t>(i)};
  return out;
}

void encode_scheduled(BoundParams& p, const std::vector<const SyntaxTree*>& batch,
                      const BatchIndex& idx, Var embed, const ForwardOptions& options,
                      std::vector<RowRef>& up, std::vector<RowRef>& down) {
  num::Graph& g = p.graph();
  const ModelConfig& c = p.config();
  const std::size_t d = c.dim;
  const sched::Schedule schedule = sched::build_schedule(batch);

  for (std::size_t level = 1; level < schedule.bottom_up.size(); ++level) {
    std::vector<RowRef> child_rows;
    std::vector<RowRef> parent_rows;
    std::vector<Slots> slots;
    std::vector<std::size_t> targets;
    for (const sched::Bucket& bucket : schedule.bottom_up[level].buckets) {
      for (const sched::NodeRef& ref : bucket.nodes) {
        const SyntaxTree& tree = *batch[ref.tree];
        const auto& children = tree.node(ref.node).children;
        const std::size_t base = idx.offsets[ref.tree];
        slots.push_back({child_rows.size(), children.size()});
        for (std::size_t j = 0; j < bucket.width; ++j) {
          child_rows.push_back(j < children.size() ? up[base + children[j]] : RowRef{});
        }
        parent_rows.push_back({embed, static_cast<std::int64_t>(base + ref.node)});
        targets.push_back(base + ref.node);
      }
    }
    Var children = num::gather(g, child_rows, d, options.padding);
    Var parents = num::gather(g, parent_rows, d);
    Var out = bottom_up_unit(p, parents, children, slots);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      up[targets[i]] = {out, static_cast<std::int64_t>(i)};
    }
  }

  if (!c.use_top_down) {
    down = up;
    return;
  }
  down = up;  // roots keep h_down = h_up
  for (std::size_t level = 1; level < schedule.top_down.size(); ++level) {
    std::vector<RowRef> child_rows;
    std::vector<RowRef> parent_rows;
    std::vector<std::size_t> targets;
    for (const sched::NodeRef& ref : schedule.top_down[level]) {
      const std::size_t base = idx.offsets[ref.tree];
      const NodeId parent = *idx.parents[ref.tree][ref.node];
      child_rows.push_back(up[base + ref.node]);
      parent_rows.push_back(down[base + parent]);
      targets.push_back(base + ref.node);
    }
    Var summed = num::add(g, num::gather(g, child_rows, d), num::gather(g, parent_rows, d));
    Var out = top_down_unit(p, summed);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      down[targets[i]] = {out, static_cast<std::int64_t>(i)};
    }
  }
}

void encode_naive(BoundParams& p, const std::vector<const SyntaxTree*>& batch,
                  const BatchIndex& idx, Var embed, std::vector<RowRef>& up,
                  std::vector<RowRef>& down) {
  num::Graph& g = p.graph();
  const ModelConfig& c = p.config();
  const std::size_t d = c.dim;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const SyntaxTree& tree = *batch[t];
    const std::size_t base = idx.offsets[t];
    for (NodeId id : postorder(tree)) {
      const auto& children = tree.node(id).children;
      if (children.empty()) continue;
      std::vector<RowRef> rows;
      for (NodeId child : children) rows.push_back(up[base + child]);
      const RowRef self{embed, static_cast<std::int64_t>(base + id)};
      Var h = bottom_up_step(p, num::gather(g, std::span(&self, 1), d), num::gather(g, rows, d));
      up[base + id] = {h, 0};
    }
  }
  down = up;
  if (!c.use_top_down) return;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const SyntaxTree& tree = *batch[t];
    const std::size_t base = idx.offsets[t];
    for (NodeId id : preorder(tree)) {
      const auto& children = tree.node(id).children;
      if (children.empty()) continue;
      std::vector<RowRef> rows;
      for (NodeId child : children) rows.push_back(up[base + child]);
      const RowRef parent = down[base + id];
      Var h = top_down_step(p, num::gather(g, std::span(&parent, 1), d), num::gather(g, rows, d));
      for (std::size_t j = 0; j < children.size(); ++j) {
        down[base + children[j]] = {h, static_cast<std::int64_t>(j)};
      }
    }
  }
}

}  // namespace

Var embed_nodes(BoundParams& p, const std::vector<const SyntaxTree*>& batch) {
  const ModelConfig& c = p.config();
  std::vector<std::int64_t> types;
  std::vector<std::int64_t> tokens;
  for (const SyntaxTree* tree : batch) {
    for (const SyntaxNode& node : tree->nodes) {
      if (node.type_id < 0 || static_cast<std::size_t>(node.type_id) >= c.type_vocab) {
        throw Error("type id " + std::to_string(node.type_id) + " outside the type vocabulary of " +
                    std::to_string(c.type_vocab));
      }
      types.push_back(node.type_id);
      if (!node.token_id) {
        tokens.push_back(static_cast<std::int64_t>(c.token_vocab));
      } else if (*node.token_id < 0 || static_cast<std::size_t>(*node.token_id) >= c.token_vocab) {
        throw Error("token id " + std::to_string(*node.token_id) +
                    " outside the token vocabulary of " + std::to_string(c.token_vocab));
      } else {
        tokens.push_back(*node.token_id);
      }
    }
  }
  num::Graph& g = p.graph();
  return num::concat_cols(g, num::gather_rows(g, p["embed.type"], types),
                          num::gather_rows(g, p["embed.token"], tokens));
}

Encoding encode(BoundParams& p, const std::vector<const SyntaxTree*>& batch,
                const ForwardOptions& options) {
  if (batch.empty()) throw Error("encode: empty batch");
  num::Graph& g = p.graph();
  const BatchIndex idx = index_batch(batch);
  Encoding enc;
  enc.offsets = idx.offsets;
  enc.embed = embed_nodes(p, batch);

  std::vector<RowRef> up = refs_to(enc.embed, idx.offsets.back());
  std::vector<RowRef> down;
  if (options.mode == ExecutionMode::kScheduled) {
    encode_scheduled(p, batch, idx, enc.embed, options, up, down);
  } else {
    encode_naive(p, batch, idx, enc.embed, up, down);
  }
  const std::size_t d = p.config().dim;
  enc.up = num::gather(g, up, d);
  enc.down = p.config().use_top_down ? num::gather(g, down, d) : enc.up;
  return enc;
}

Encoding encode(BoundParams& p, const SyntaxTree& tree, const ForwardOptions& options) {
  return encode(p, std::vector<const SyntaxTree*>{&tree}, options);
}

Var pool(BoundParams& p, const Encoding& enc) {
  num::Graph& g = p.graph();
  std::vector<num::Segment> segments;
  for (std::size_t t = 0; t < enc.trees(); ++t) {
    segments.push_back({enc.offsets[t], enc.offsets[t + 1] - enc.offsets[t]});
  }
  Var gates = num::matmul(g, enc.down, p["pool.gate"]);
  return num::segment_softmax_pool(g, enc.down, gates, segments);
}

Var multi_head_attention(BoundParams& p, const std::string& prefix, Var queries, Var keys,
                         Var values) {
  num::Graph& g = p.graph();
  const ModelConfig& c = p.config();
  const std::size_t nq = g.value(queries).rows();
  const std::size_t nk = g.value(keys).rows();
  if (g.value(values).rows() != nk) throw ShapeError("multi_head_attention: keys and values differ in rows");
  Var q = num::matmul(g, queries, p[prefix + ".query"]);
  Var k = num::matmul(g, keys, p[prefix + ".key"]);
  Var v = num::matmul(g, values, p[prefix + ".value"]);
  num::AttentionSpec spec;
  spec.heads = c.heads;
  spec.content_scale = scales(c).parental;
  const AttentionSegment segment{0, nq, 0, nk};
  Var mixed = num::attention(g, q, k, v, std::span(&segment, 1), spec);
  return num::matmul(g, mixed, p[prefix + ".output"]);
}

Var fraternal_attention(BoundParams& p, Var siblings, std::vector<double>* weights) {
  if (!p.config().use_fraternal_attention) throw Error("fraternal attention is disabled");
  const std::vector<Slots> slots{{0, p.graph().value(siblings).rows()}};
  return fraternal_block(p, siblings, slots, weights);
}

Var bottom_up_step(BoundParams& p, Var parent_embedding, Var children_up) {
  const std::vector<Slots> slots{{0, p.graph().value(children_up).rows()}};
  return bottom_up_unit(p, parent_embedding, children_up, slots);
}

Var top_down_step(BoundParams& p, Var parent_down, Var children_up) {
  if (!p.config().use_top_down) throw Error("top-down propagation is disabled");
  return top_down_unit(p, num::add_row(p.graph(), children_up, parent_down));
}

}  // namespace treetx::model
