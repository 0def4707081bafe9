#include "treetx/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "treetx/core/errors.hpp"
#include "treetx/core/random.hpp"
#include "treetx/numerics/primitives.hpp"

namespace treetx::num {

Var matmul(Graph& g, Var a, Var b) {
  Tensor out = num::matmul(g.value(a), g.value(b));
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    if (g.requires_grad(a)) gemm_nt(dy, g.value(b), g.grad_mut(a), true);
    if (g.requires_grad(b)) gemm_tn(g.value(a), dy, g.grad_mut(b), true);
  });
}

Var matmul_nt(Graph& g, Var a, Var b) {
  Tensor out = Tensor::matrix(g.value(a).rows(), g.value(b).rows());
  gemm_nt(g.value(a), g.value(b), out, false);
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    if (g.requires_grad(a)) gemm_nn(dy, g.value(b), g.grad_mut(a), true);
    if (g.requires_grad(b)) gemm_tn(dy, g.value(a), g.grad_mut(b), true);
  });
}

Var add(Graph& g, Var a, Var b) {
  Tensor out = num::add(g.value(a), g.value(b));
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    for (Var in : {a, b}) {
      if (!g.requires_grad(in)) continue;
      Tensor& dx = g.grad_mut(in);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    }
  });
}

Var add_row(Graph& g, Var m, Var row) {
  Tensor out = broadcast_add_row(g.value(m), g.value(row));
  return g.record(std::move(out), {m, row}, [m, row](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    if (g.requires_grad(m)) {
      Tensor& dm = g.grad_mut(m);
      for (std::size_t i = 0; i < dm.size(); ++i) dm[i] += dy[i];
    }
    if (g.requires_grad(row)) {
      Tensor& dr = g.grad_mut(row);
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        auto src = dy.row(r);
        for (std::size_t c = 0; c < src.size(); ++c) dr[c] += src[c];
      }
    }
  });
}

Var relu(Graph& g, Var a) {
  Tensor out = g.value(a);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return g.record(std::move(out), {a}, [a](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    const Tensor& x = g.value(a);
    Tensor& dx = g.grad_mut(a);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (x[i] > 0.0) dx[i] += dy[i];
    }
  });
}

Var scale(Graph& g, Var a, double factor) {
  Tensor out = g.value(a);
  for (double& v : out.data()) v *= factor;
  return g.record(std::move(out), {a}, [a, factor](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    Tensor& dx = g.grad_mut(a);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * dy[i];
  });
}

Var layer_norm(Graph& g, Var x, Var gamma, Var beta, double eps) {
  auto normalized = std::make_shared<Tensor>();
  auto inv_std = std::make_shared<std::vector<double>>();
  Tensor out = layer_norm_rows(g.value(x), g.value(gamma), g.value(beta), eps, normalized.get(),
                               inv_std.get());
  return g.record(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, normalized, inv_std](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    const Tensor& z = *normalized;
    const Tensor& gm = g.value(gamma);
    const std::size_t d = z.cols();
    if (g.requires_grad(gamma)) {
      Tensor& dg = g.grad_mut(gamma);
      for (std::size_t r = 0; r < z.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) dg[c] += dy.at(r, c) * z.at(r, c);
      }
    }
    if (g.requires_grad(beta)) {
      Tensor& db = g.grad_mut(beta);
      for (std::size_t r = 0; r < z.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) db[c] += dy.at(r, c);
      }
    }
    if (g.requires_grad(x)) {
      Tensor& dx = g.grad_mut(x);
      const auto n = static_cast<double>(d);
      std::vector<double> dz(d);
      for (std::size_t r = 0; r < z.rows(); ++r) {
        double mean_dz = 0.0, mean_dzz = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          dz[c] = dy.at(r, c) * gm[c];
          mean_dz += dz[c];
          mean_dzz += dz[c] * z.at(r, c);
        }
        mean_dz /= n;
        mean_dzz /= n;
        const double inv = (*inv_std)[r];
        for (std::size_t c = 0; c < d; ++c) {
          dx.at(r, c) += inv * (dz[c] - mean_dz - z.at(r, c) * mean_dzz);
        }
      }
    }
  });
}

Var concat_cols(Graph& g, Var a, Var b) {
  const Tensor& va = g.value(a);
  const Tensor& vb = g.value(b);
  if (va.rows() != vb.rows()) {
    throw ShapeError("concat_cols: " + va.shape_string() + " vs " + vb.shape_string());
  }
  const std::size_t ca = va.cols(), cb = vb.cols();
  Tensor out = Tensor::matrix(va.rows(), ca + cb);
  for (std::size_t r = 0; r < va.rows(); ++r) {
    auto o = out.row(r);
    auto ra = va.row(r);
    auto rb = vb.row(r);
    std::copy(ra.begin(), ra.end(), o.begin());
    std::copy(rb.begin(), rb.end(), o.begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return g.record(std::move(out), {a, b}, [a, b, ca, cb](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    for (std::size_t r = 0; r < dy.rows(); ++r) {
      if (g.requires_grad(a)) {
        Tensor& da = g.grad_mut(a);
        for (std::size_t c = 0; c < ca; ++c) da.at(r, c) += dy.at(r, c);
      }
      if (g.requires_grad(b)) {
        Tensor& db = g.grad_mut(b);
        for (std::size_t c = 0; c < cb; ++c) db.at(r, c) += dy.at(r, ca + c);
      }
    }
  });
}

Var sum(Graph& g, Var a) {
  double total = 0.0;
  for (double v : g.value(a).data()) total += v;
  return g.record(Tensor::vector({total}), {a}, [a](Graph& g, Var self) {
    const double dy = g.grad_mut(self)[0];
    Tensor& dx = g.grad_mut(a);
    for (double& v : dx.data()) v += dy;
  });
}

Var dot(Graph& g, Var a, const Tensor& weights) {
  const Tensor& va = g.value(a);
  if (va.size() != weights.size()) {
    throw ShapeError("dot: " + va.shape_string() + " vs " + weights.shape_string());
  }
  double total = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) total += va[i] * weights[i];
  return g.record(Tensor::vector({total}), {a}, [a, weights](Graph& g, Var self) {
    const double dy = g.grad_mut(self)[0];
    Tensor& dx = g.grad_mut(a);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy * weights[i];
  });
}

namespace {

void fill_padding(std::span<double> row, const Padding& pad, Rng* rng) {
  if (pad.random && rng) {
    for (double& v : row) v = rng->uniform(-pad.spread, pad.spread);
  } else {
    std::fill(row.begin(), row.end(), pad.value);
  }
}

}  // namespace

Var gather_rows(Graph& g, Var src, std::span<const std::int64_t> rows, const Padding& pad) {
  const Tensor& s = g.value(src);
  const std::size_t d = s.cols();
  Tensor out = Tensor::matrix(rows.size(), d);
  Rng rng(pad.seed);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0) {
      fill_padding(out.row(i), pad, &rng);
      continue;
    }
    if (static_cast<std::size_t>(rows[i]) >= s.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " outside " + s.shape_string());
    }
    auto in = s.row(static_cast<std::size_t>(rows[i]));
    std::copy(in.begin(), in.end(), out.row(i).begin());
  }
  std::vector<std::int64_t> idx(rows.begin(), rows.end());
  return g.record(std::move(out), {src}, [src, idx = std::move(idx)](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    Tensor& dx = g.grad_mut(src);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0) continue;
      auto from = dy.row(i);
      auto to = dx.row(static_cast<std::size_t>(idx[i]));
      for (std::size_t c = 0; c < from.size(); ++c) to[c] += from[c];
    }
  });
}

Var gather(Graph& g, std::span<const RowRef> rows, std::size_t cols, const Padding& pad) {
  Tensor out = Tensor::matrix(rows.size(), cols);
  Rng rng(pad.seed);
  std::vector<Var> inputs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RowRef& ref = rows[i];
    if (ref.row < 0) {
      fill_padding(out.row(i), pad, &rng);
      continue;
    }
    const Tensor& s = g.value(ref.src);
    if (s.cols() != cols || static_cast<std::size_t>(ref.row) >= s.rows()) {
      throw ShapeError("gather: bad row " + std::to_string(ref.row) + " of " + s.shape_string());
    }
    auto in = s.row(static_cast<std::size_t>(ref.row));
    std::copy(in.begin(), in.end(), out.row(i).begin());
    if (inputs.empty() || !(inputs.back() == ref.src)) inputs.push_back(ref.src);
  }
  std::vector<RowRef> refs(rows.begin(), rows.end());
  return g.record(std::move(out), inputs, [refs = std::move(refs)](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const RowRef& ref = refs[i];
      if (ref.row < 0 || !g.requires_grad(ref.src)) continue;
      auto from = dy.row(i);
      auto to = g.grad_mut(ref.src).row(static_cast<std::size_t>(ref.row));
      for (std::size_t c = 0; c < from.size(); ++c) to[c] += from[c];
    }
  });
}

Var segment_softmax_pool(Graph& g, Var values, Var gates, std::span<const Segment> segments) {
  const Tensor& h = g.value(values);
  const Tensor& gate = g.value(gates);
  if (gate.size() != h.rows()) {
    throw ShapeError("segment_softmax_pool: gates " + gate.shape_string() + " vs values " +
                     h.shape_string());
  }
  const std::size_t d = h.cols();
  Tensor out = Tensor::matrix(segments.size(), d);
  auto weights = std::make_shared<std::vector<double>>(h.rows(), 0.0);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto [begin, count] = segments[s];
    if (count == 0) throw ShapeError("segment_softmax_pool: empty segment");
    std::span<double> w(weights->data() + begin, count);
    for (std::size_t i = 0; i < count; ++i) w[i] = gate[begin + i];
    softmax_inplace(w);
    auto o = out.row(s);
    for (std::size_t i = 0; i < count; ++i) {
      auto row = h.row(begin + i);
      for (std::size_t c = 0; c < d; ++c) o[c] += w[i] * row[c];
    }
  }
  std::vector<Segment> segs(segments.begin(), segments.end());
  return g.record(std::move(out), {values, gates},
                  [values, gates, weights, segs = std::move(segs)](Graph& g, Var self) {
    const Tensor& dy = g.grad_mut(self);
    const Tensor& h = g.value(values);
    const std::size_t d = h.cols();
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto [begin, count] = segs[s];
      auto dout = dy.row(s);
      if (g.requires_grad(values)) {
        Tensor& dh = g.grad_mut(values);
        for (std::size_t i = 0; i < count; ++i) {
          auto row = dh.row(begin + i);
          for (std::size_t c = 0; c < d; ++c) row[c] += (*weights)[begin + i] * dout[c];
        }
      }
      if (g.requires_grad(gates)) {
        Tensor& dg = g.grad_mut(gates);
        std::vector<double> dw(count);
        double mix = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
          auto row = h.row(begin + i);
          double acc = 0.0;
          for (std::size_t c = 0; c < d; ++c) acc += dout[c] * row[c];
          dw[i] = acc;
          mix += (*weights)[begin + i] * acc;
        }
        for (std::size_t i = 0; i < count; ++i) {
          dg[begin + i] += (*weights)[begin + i] * (dw[i] - mix);
        }
      }
    }
  });
}

Var cross_entropy(Graph& g, Var logits, std::span<const std::int64_t> labels) {
  const Tensor& x = g.value(logits);
  if (labels.size() != x.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     x.shape_string());
  }
  auto probs = std::make_shared<Tensor>(x.shape());
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= x.cols()) {
      throw Error("cross_entropy: label " + std::to_string(labels[r]) + " out of range [0, " +
                  std::to_string(x.cols()) + ")");
    }
    auto p = probs->row(r);
    auto in = x.row(r);
    std::copy(in.begin(), in.end(), p.begin());
    softmax_inplace(p);
    double max = in[0];
    for (double v : in) max = std::max(max, v);
    double z = 0.0;
    for (double v : in) z += std::exp(v - max);
    total += -(in[static_cast<std::size_t>(labels[r])] - max - std::log(z));
  }
  std::vector<std::int64_t> lab(labels.begin(), labels.end());
  return g.record(Tensor::vector({total}), {logits}, [logits, probs, lab = std::move(lab)](Graph& g, Var self) {
    const double dy = g.grad_mut(self)[0];
    Tensor& dx = g.grad_mut(logits);
    for (std::size_t r = 0; r < probs->rows(); ++r) {
      for (std::size_t c = 0; c < probs->cols(); ++c) {
        const double onehot = static_cast<std::int64_t>(c) == lab[r] ? 1.0 : 0.0;
        dx.at(r, c) += dy * (probs->at(r, c) - onehot);
      }
    }
  });
}

Var segment_cross_entropy(Graph& g, Var scores, std::span<const Segment> segments,
                          std::span<const std::int64_t> targets) {
  const Tensor& x = g.value(scores);
  if (targets.size() != segments.size()) throw ShapeError("segment_cross_entropy: target count");
  auto probs = std::make_shared<std::vector<double>>(x.size(), 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto [begin, count] = segments[s];
    if (count == 0) throw Error("segment_cross_entropy: empty candidate set");
    if (targets[s] < 0 || static_cast<std::size_t>(targets[s]) >= count) {
      throw Error("segment_cross_entropy: target " + std::to_string(targets[s]) +
                  " outside segment of " + std::to_string(count));
    }
    double max = x[begin];
    for (std::size_t i = 0; i < count; ++i) max = std::max(max, x[begin + i]);
    double z = 0.0;
    for (std::size_t i = 0; i < count; ++i) z += std::exp(x[begin + i] - max);
    for (std::size_t i = 0; i < count; ++i) (*probs)[begin + i] = std::exp(x[begin + i] - max) / z;
    total += -(x[begin + static_cast<std::size_t>(targets[s])] - max - std::log(z));
  }
  std::vector<Segment> segs(segments.begin(), segments.end());
  std::vector<std::int64_t> tgt(targets.begin(), targets.end());
  return g.record(Tensor::vector({total}), {scores},
                  [scores, probs, segs = std::move(segs), tgt = std::move(tgt)](Graph& g, Var self) {
    const double dy = g.grad_mut(self)[0];
    Tensor& dx = g.grad_mut(scores);
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto [begin, count] = segs[s];
      for (std::size_t i = 0; i < count; ++i) {
        const double onehot = static_cast<std::int64_t>(i) == tgt[s] ? 1.0 : 0.0;
        dx[begin + i] += dy * ((*probs)[begin + i] - onehot);
      }
    }
  });
}

}  // namespace treetx::num
