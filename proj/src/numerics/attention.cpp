#include "treetx/numerics/attention.hpp"

#include <algorithm>
#include <memory>
#include <vector>

#include "treetx/core/errors.hpp"
#include "treetx/numerics/primitives.hpp"

namespace treetx::num {

Var attention(Graph& g, Var q, Var k, Var v, std::span<const AttentionSegment> segments,
              const AttentionSpec& spec, std::optional<Var> bias) {
  const Tensor& Q = g.value(q);
  const Tensor& K = g.value(k);
  const Tensor& V = g.value(v);
  const std::size_t heads = spec.heads;
  const double content_scale = spec.content_scale;
  const double bias_scale = spec.bias_scale;
  const std::size_t d = Q.cols();
  if (K.cols() != d || V.cols() != d || K.rows() != V.rows()) {
    throw ShapeError("attention: Q " + Q.shape_string() + ", K " + K.shape_string() + ", V " +
                     V.shape_string());
  }
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const Tensor* B = bias ? &g.value(*bias) : nullptr;

  // Softmax weights per segment, laid out [segment][head][m][j].
  std::vector<std::size_t> offsets(segments.size() + 1, 0);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    if (seg.q_begin + seg.q_count > Q.rows() || seg.kv_begin + seg.kv_count > K.rows()) {
      throw ShapeError("attention: segment outside the input rows");
    }
    if (seg.q_count > 0 && seg.kv_count == 0) throw ShapeError("attention: segment without keys");
    if (B && (seg.q_count > B->rows() || seg.kv_count > B->cols())) {
      throw ShapeError("attention: bias " + B->shape_string() + " smaller than segment");
    }
    offsets[s + 1] = offsets[s] + heads * seg.q_count * seg.kv_count;
  }
  auto weights = std::make_shared<std::vector<double>>(offsets.back());

  std::size_t cells = 0;
  Tensor out = Tensor::matrix(Q.rows(), d);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    cells += heads * seg.q_count * seg.kv_count;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      double* w = weights->data() + offsets[s] + h * seg.q_count * seg.kv_count;
      for (std::size_t m = 0; m < seg.q_count; ++m) {
        const double* qm = Q.raw() + (seg.q_begin + m) * d + c0;
        std::span<double> row(w + m * seg.kv_count, seg.kv_count);
        for (std::size_t j = 0; j < seg.kv_count; ++j) {
          const double* kj = K.raw() + (seg.kv_begin + j) * d + c0;
          double acc = 0.0;
          for (std::size_t c = 0; c < dh; ++c) acc += qm[c] * kj[c];
          row[j] = content_scale * acc + (B ? bias_scale * B->at(m, j) : 0.0);
        }
        softmax_inplace(row);
        double* om = out.raw() + (seg.q_begin + m) * d + c0;
        for (std::size_t j = 0; j < seg.kv_count; ++j) {
          const double* vj = V.raw() + (seg.kv_begin + j) * d + c0;
          const double wj = row[j];
          for (std::size_t c = 0; c < dh; ++c) om[c] += wj * vj[c];
        }
      }
    }
  }
  auto& stats = g.stats();
  switch (spec.kind) {
    case AttentionKind::kFraternal: stats.fraternal_cells += cells; break;
    case AttentionKind::kParental: stats.parental_cells += cells; break;
    case AttentionKind::kOther: stats.other_cells += cells; break;
  }
  stats.peak_call_cells = std::max(stats.peak_call_cells, cells);
  if (spec.capture) *spec.capture = *weights;

  std::vector<AttentionSegment> segs(segments.begin(), segments.end());
  std::vector<Var> inputs{q, k, v};
  if (bias) inputs.push_back(*bias);
  return g.record(std::move(out), inputs,
                  [q, k, v, bias, heads, content_scale, bias_scale, weights, offsets = std::move(offsets),
                   segs = std::move(segs)](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    const Tensor& Q = g.value(q);
    const Tensor& K = g.value(k);
    const Tensor& V = g.value(v);
    const std::size_t d = Q.cols();
    const std::size_t dh = d / heads;
    Tensor* dQ = g.requires_grad(q) ? &g.grad_mut(q) : nullptr;
    Tensor* dK = g.requires_grad(k) ? &g.grad_mut(k) : nullptr;
    Tensor* dV = g.requires_grad(v) ? &g.grad_mut(v) : nullptr;
    Tensor* dB = bias && g.requires_grad(*bias) ? &g.grad_mut(*bias) : nullptr;
    std::vector<double> dw;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto& seg = segs[s];
      dw.resize(seg.kv_count);
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh;
        const double* w = weights->data() + offsets[s] + h * seg.q_count * seg.kv_count;
        for (std::size_t m = 0; m < seg.q_count; ++m) {
          const double* wm = w + m * seg.kv_count;
          const double* gm = dy.raw() + (seg.q_begin + m) * d + c0;
          double mix = 0.0;
          for (std::size_t j = 0; j < seg.kv_count; ++j) {
            const double* vj = V.raw() + (seg.kv_begin + j) * d + c0;
            double acc = 0.0;
            for (std::size_t c = 0; c < dh; ++c) acc += gm[c] * vj[c];
            dw[j] = acc;
            mix += wm[j] * acc;
            if (dV) {
              double* dvj = dV->raw() + (seg.kv_begin + j) * d + c0;
              for (std::size_t c = 0; c < dh; ++c) dvj[c] += wm[j] * gm[c];
            }
          }
          const double* qm = Q.raw() + (seg.q_begin + m) * d + c0;
          double* dqm = dQ ? dQ->raw() + (seg.q_begin + m) * d + c0 : nullptr;
          for (std::size_t j = 0; j < seg.kv_count; ++j) {
            const double ds = wm[j] * (dw[j] - mix);
            if (ds == 0.0) continue;
            const double* kj = K.raw() + (seg.kv_begin + j) * d + c0;
            const double dc = ds * content_scale;
            if (dqm) {
              for (std::size_t c = 0; c < dh; ++c) dqm[c] += dc * kj[c];
            }
            if (dK) {
              double* dkj = dK->raw() + (seg.kv_begin + j) * d + c0;
              for (std::size_t c = 0; c < dh; ++c) dkj[c] += dc * qm[c];
            }
            if (dB) dB->at(m, j) += ds * bias_scale;
          }
        }
      }
    }
  });
}

}  // namespace treetx::num
