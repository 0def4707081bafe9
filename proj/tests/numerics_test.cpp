#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "treetx/core/errors.hpp"
#include "treetx/core/random.hpp"
#include "treetx/numerics/attention.hpp"
#include "treetx/numerics/checkpoint.hpp"
#include "treetx/numerics/grad_check.hpp"
#include "treetx/numerics/graph.hpp"
#include "treetx/numerics/ops.hpp"
#include "treetx/numerics/primitives.hpp"

namespace treetx::num {
namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double spread = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-spread, spread);
  return t;
}

std::vector<double> two_pass_layer_norm(const std::vector<double>& x, double eps) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  std::vector<double> out;
  for (double v : x) out.push_back((v - mean) / std::sqrt(var + eps));
  return out;
}

TEST(Softmax, Examples) {
  const std::vector<double> zero{0, 0, 0};
  for (double v : softmax(zero)) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);

  const std::vector<double> a{1, 2};
  const std::vector<double> b{101, 102};
  const auto sa = softmax(a);
  const auto sb = softmax(b);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(sa[i], sb[i], 1e-15);

  const std::vector<double> x{1, 2, 3};
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const auto s = softmax(x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s[i], std::exp(x[i]) / z, 1e-15);
  EXPECT_NEAR(s[0], 0.09003057, 5e-9);
  EXPECT_NEAR(s[1], 0.24472847, 5e-9);
  EXPECT_NEAR(s[2], 0.66524096, 5e-9);
}

TEST(Softmax, RejectsNaN) {
  const std::vector<double> x{1.0, std::nan("")};
  EXPECT_THROW(softmax(x), NumericError);
}

TEST(Softmax, SumsToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + rng.index(40));
    for (double& v : x) v = rng.uniform(-50, 50);
    double sum = 0.0;
    for (double v : softmax(x)) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(LayerNorm, Examples) {
  const std::vector<double> c{2.5, 2.5, 2.5, 2.5};
  const std::vector<double> one(4, 1.0);
  const std::vector<double> zero(4, 0.0);
  for (double v : layer_norm(c, one, zero)) EXPECT_EQ(v, 0.0);

  const std::vector<double> x{1, -1};
  const std::vector<double> g{1, 1};
  const std::vector<double> b{0, 0};
  const auto y = layer_norm(x, g, b, 1e-300);
  EXPECT_NEAR(y[0], 1.0, 1e-15);
  EXPECT_NEAR(y[1], -1.0, 1e-15);
  EXPECT_THROW(layer_norm(x, one, zero), ShapeError);
}

TEST(LayerNorm, TwoPassOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(8), gamma(8), beta(8);
    for (auto* v : {&x, &gamma, &beta})
      for (double& e : *v) e = rng.uniform(-3, 3);
    const auto ref = two_pass_layer_norm(x, kLayerNormEps);
    const auto y = layer_norm(x, gamma, beta);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(y[i], ref[i] * gamma[i] + beta[i], 1e-12);
  }
}

TEST(LayerNorm, NormalizedRowsHaveZeroMean) {
  Rng rng(9);
  const Tensor x = random_tensor(rng, {20, 13}, 100.0);
  Tensor normalized;
  layer_norm_rows(x, Tensor({13}, 1.0), Tensor({13}, 0.0), kLayerNormEps, &normalized);
  for (std::size_t r = 0; r < 20; ++r) {
    double mean = 0.0;
    for (double v : normalized.row(r)) mean += v;
    EXPECT_LE(std::abs(mean / 13.0), 1e-10);
  }
}

TEST(Matmul, Identity) {
  Rng rng(1);
  const Tensor x = random_tensor(rng, {5, 4});
  EXPECT_EQ(matmul(Tensor::identity(5), x), x);
  EXPECT_EQ(matmul(x, Tensor::identity(4)), x);
}

TEST(Matmul, TripleLoopOracle) {
  const Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::matrix(3, 2, {7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(a, b);
  EXPECT_EQ(c, Tensor::matrix(2, 2, {58, 64, 139, 154}));

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(9), k = 1 + rng.index(9), m = 1 + rng.index(9);
    const Tensor x = random_tensor(rng, {n, k});
    const Tensor y = random_tensor(rng, {k, m});
    const Tensor z = matmul(x, y);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < k; ++l) s += x.at(i, l) * y.at(l, j);
        EXPECT_NEAR(z.at(i, j), s, 1e-13);
      }
    Tensor tn = Tensor::matrix(m, k);
    gemm_tn(z, x, tn, false);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < k; ++l) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += z.at(i, j) * x.at(i, l);
        EXPECT_NEAR(tn.at(j, l), s, 1e-12);
      }
    Tensor nt = Tensor::matrix(n, k);
    gemm_nt(z, y, nt, false);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < k; ++l) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += z.at(i, j) * y.at(l, j);
        EXPECT_NEAR(nt.at(i, l), s, 1e-12);
      }
  }
  EXPECT_THROW(matmul(a, a), ShapeError);
}

TEST(Broadcast, AddRow) {
  const Tensor v = Tensor::vector({1.5, -2, 3});
  const Tensor out = broadcast_add_row(Tensor::matrix(3, 3), v);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.at(r, c), v[c]);
  EXPECT_THROW(broadcast_add_row(Tensor::matrix(3, 2), v), ShapeError);
  EXPECT_THROW(add(Tensor::matrix(3, 2), Tensor::matrix(2, 3)), ShapeError);
}

TEST(Linear, MatchesParts) {
  Rng rng(4);
  const Tensor x = random_tensor(rng, {3, 4});
  const Tensor w = random_tensor(rng, {4, 2});
  const Tensor b = random_tensor(rng, {2});
  EXPECT_EQ(linear(x, w, b), broadcast_add_row(matmul(x, w), b));
}

TEST(GradCheck, Quadratic) {
  ParamStore p;
  p.add_learnable("w", Tensor::vector({3.0}));
  const ObjectiveFn f = [](const ParamStore& s, GradMap* g) {
    const double w = s.get("w")[0];
    if (g) (*g)["w"][0] += 2.0 * w;
    return w * w;
  };
  const auto r = grad_check(f, p, 1e-5);
  EXPECT_LE(r.max_relative_error, 1e-10);
  EXPECT_EQ(r.coordinates, 1u);
}

TEST(GradCheck, LinearIsExactUpToRounding) {
  ParamStore p;
  p.add_learnable("w", Tensor::vector({0.3, -1.2, 4.0}));
  const std::vector<double> a{2.0, -0.5, 1.25};
  const ObjectiveFn f = [&](const ParamStore& s, GradMap* g) {
    double y = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      y += a[i] * s.get("w")[i];
      if (g) (*g)["w"][i] += a[i];
    }
    return y;
  };
  for (double eps : {1e-2, 1e-3, 1e-5}) EXPECT_LE(grad_check(f, p, eps).max_relative_error, 1e-9);
}

TEST(GradCheck, DetectsWrongGradient) {
  ParamStore p;
  p.add_learnable("w", Tensor::vector({1.0}));
  const ObjectiveFn f = [](const ParamStore& s, GradMap* g) {
    const double w = s.get("w")[0];
    if (g) (*g)["w"][0] += 3.0 * w;
    return w * w;
  };
  EXPECT_NEAR(grad_check(f, p).max_relative_error, 1.0 / 3.0, 1e-8);
}

TEST(GradCheck, NonFiniteProbe) {
  ParamStore p;
  p.add_learnable("w", Tensor::vector({0.0}));
  const ObjectiveFn f = [](const ParamStore& s, GradMap*) {
    const double w = s.get("w")[0];
    return w < 0 ? std::log(w) : w;
  };
  EXPECT_THROW(grad_check(f, p), NumericError);
}

// Each case builds a scalar from graph ops over the learnable tensors of `p`.
using Builder = std::function<Var(Graph&, const ParamStore&)>;

double check_op(const ParamStore& p, const Builder& build) {
  const ObjectiveFn f = [&](const ParamStore& s, GradMap* grads) {
    Graph g;
    Var out = build(g, s);
    if (grads) {
      g.backward(out);
      g.accumulate_param_grads(*grads);
    }
    return g.value(out)[0];
  };
  return grad_check(f, p, 1e-5).max_relative_error;
}

// Reduces any value to a scalar with fixed random weights so every output
// coordinate carries a distinct gradient.
Var reduce(Graph& g, Var v, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w(g.value(v).shape());
  for (double& e : w.data()) e = rng.uniform(-1, 1);
  return dot(g, v, w);
}

class PrimitiveGradients : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGradients, MatchCentralDifferences) {
  Rng rng(100 + GetParam());
  const std::size_t n = 1 + rng.index(4), k = 1 + rng.index(5), m = 1 + rng.index(4);
  ParamStore p;
  p.add_learnable("a", random_tensor(rng, {n, k}));
  p.add_learnable("b", random_tensor(rng, {k, m}));
  p.add_learnable("c", random_tensor(rng, {n, k}));
  p.add_learnable("r", random_tensor(rng, {k}));
  p.add_learnable("bt", random_tensor(rng, {m, k}));
  const std::uint64_t s = 7 + GetParam();
  const std::vector<std::pair<std::string, Builder>> cases = {
      {"matmul", [&](Graph& g, const ParamStore& q) { return reduce(g, matmul(g, g.parameter(q, "a"), g.parameter(q, "b")), s); }},
      {"matmul_nt", [&](Graph& g, const ParamStore& q) { return reduce(g, matmul_nt(g, g.parameter(q, "a"), g.parameter(q, "bt")), s); }},
      {"add", [&](Graph& g, const ParamStore& q) { return reduce(g, add(g, g.parameter(q, "a"), g.parameter(q, "c")), s); }},
      {"add_row", [&](Graph& g, const ParamStore& q) { return reduce(g, add_row(g, g.parameter(q, "a"), g.parameter(q, "r")), s); }},
      {"relu", [&](Graph& g, const ParamStore& q) { return reduce(g, relu(g, g.parameter(q, "a")), s); }},
      {"scale", [&](Graph& g, const ParamStore& q) { return reduce(g, scale(g, g.parameter(q, "a"), -1.7), s); }},
      {"layer_norm", [&](Graph& g, const ParamStore& q) {
         return reduce(g, layer_norm(g, g.parameter(q, "a"), g.parameter(q, "r"), g.parameter(q, "r"), 1e-5), s);
       }},
      {"concat", [&](Graph& g, const ParamStore& q) { return reduce(g, concat_cols(g, g.parameter(q, "a"), g.parameter(q, "c")), s); }},
      {"sum", [&](Graph& g, const ParamStore& q) { return sum(g, matmul(g, g.parameter(q, "a"), g.parameter(q, "b"))); }},
      {"gather_rows", [&](Graph& g, const ParamStore& q) {
         const std::vector<std::int64_t> rows{static_cast<std::int64_t>(n - 1), -1, 0, 0};
         return reduce(g, gather_rows(g, g.parameter(q, "a"), rows, Padding{0.5}), s);
       }},
      {"gather", [&](Graph& g, const ParamStore& q) {
         Var a = g.parameter(q, "a");
         Var c = g.parameter(q, "c");
         const std::vector<RowRef> rows{{c, 0}, {a, static_cast<std::int64_t>(n - 1)}, {a, -1}, {c, 0}};
         return reduce(g, gather(g, rows, k), s);
       }},
      {"pool", [&](Graph& g, const ParamStore& q) {
         Tensor pick = Tensor::matrix(m, 1);
         pick.at(0, 0) = 1.0;
         Var gates = matmul(g, matmul(g, g.parameter(q, "c"), g.parameter(q, "b")), g.constant(pick));
         const std::vector<Segment> segs = n > 1 ? std::vector<Segment>{{0, 1}, {1, n - 1}}
                                                 : std::vector<Segment>{{0, 1}};
         return reduce(g, segment_softmax_pool(g, g.parameter(q, "a"), gates, segs), s);
       }},
      {"cross_entropy", [&](Graph& g, const ParamStore& q) {
         std::vector<std::int64_t> labels(n);
         for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int64_t>(i % m);
         return cross_entropy(g, matmul(g, g.parameter(q, "a"), g.parameter(q, "b")), labels);
       }},
      {"segment_cross_entropy", [&](Graph& g, const ParamStore& q) {
         Tensor pick = Tensor::matrix(m, 1);
         pick.at(m - 1, 0) = 1.0;
         Var scores = matmul(g, matmul(g, g.parameter(q, "a"), g.parameter(q, "b")), g.constant(pick));
         const std::vector<Segment> segs{{0, n}};
         const std::vector<std::int64_t> targets{static_cast<std::int64_t>(n - 1)};
         return segment_cross_entropy(g, scores, segs, targets);
       }},
  };
  for (const auto& [name, build] : cases) {
    EXPECT_LT(check_op(p, build), 1e-6) << name << " n=" << n << " k=" << k << " m=" << m;
  }
}

INSTANTIATE_TEST_SUITE_P(RandomShapes, PrimitiveGradients, ::testing::Range(0, 8));

// Brute force per-pair score, normalize, mix.
std::vector<double> attention_oracle(const Tensor& q, const Tensor& k, const Tensor& v,
                                     std::size_t heads, double scale, const Tensor* bias) {
  const std::size_t d = q.cols();
  const std::size_t dh = d / heads;
  std::vector<double> out(q.rows() * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t m = 0; m < q.rows(); ++m) {
      std::vector<double> w(k.rows());
      double mx = -1e300;
      for (std::size_t j = 0; j < k.rows(); ++j) {
        double dot = 0.0;
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) dot += q.at(m, c) * k.at(j, c);
        w[j] = scale * dot + (bias ? scale * bias->at(m, j) : 0.0);
        mx = std::max(mx, w[j]);
      }
      double z = 0.0;
      for (double& e : w) z += e = std::exp(e - mx);
      for (std::size_t j = 0; j < k.rows(); ++j)
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) out[m * d + c] += w[j] / z * v.at(j, c);
    }
  return out;
}

TEST(Attention, SegmentsMatchBruteForce) {
  Rng rng(17);
  const Tensor q = random_tensor(rng, {5, 6});
  const Tensor k = random_tensor(rng, {7, 6});
  const Tensor v = random_tensor(rng, {7, 6});
  const Tensor bias = random_tensor(rng, {4, 4});
  Graph g;
  const std::vector<AttentionSegment> segs{{0, 2, 0, 3}, {3, 2, 3, 4}};
  AttentionSpec spec;
  spec.heads = 3;
  spec.content_scale = 0.3;
  spec.bias_scale = 0.3;
  std::vector<double> weights;
  spec.capture = &weights;
  const Var out = attention(g, g.constant(q), g.constant(k), g.constant(v), segs, spec, g.constant(bias));
  const Tensor& o = g.value(out);

  auto slice = [](const Tensor& t, std::size_t begin, std::size_t count) {
    Tensor s = Tensor::matrix(count, t.cols());
    for (std::size_t r = 0; r < count; ++r)
      for (std::size_t c = 0; c < t.cols(); ++c) s.at(r, c) = t.at(begin + r, c);
    return s;
  };
  for (const auto& seg : segs) {
    const auto ref = attention_oracle(slice(q, seg.q_begin, seg.q_count), slice(k, seg.kv_begin, seg.kv_count),
                                      slice(v, seg.kv_begin, seg.kv_count), 3, 0.3, &bias);
    for (std::size_t m = 0; m < seg.q_count; ++m)
      for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(o.at(seg.q_begin + m, c), ref[m * 6 + c], 1e-12);
  }
  // Row 2 belongs to no segment.
  for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(o.at(2, c), 0.0);
  EXPECT_EQ(weights.size(), 3u * (2 * 3 + 2 * 4));
  // Cells counted once per head.
  EXPECT_EQ(g.stats().other_cells, 3u * (2 * 3 + 2 * 4));
}

TEST(Determinism, RepeatedForwardBackwardIsBitIdentical) {
  Rng rng(5);
  ParamStore p;
  p.add_learnable("a", random_tensor(rng, {6, 9}));
  p.add_learnable("b", random_tensor(rng, {9, 4}));
  auto run = [&] {
    Graph g;
    Var out = reduce(g, layer_norm(g, relu(g, matmul(g, g.parameter(p, "a"), g.parameter(p, "b"))),
                                   g.constant(Tensor({4}, 1.0)), g.constant(Tensor({4}, 0.0)), 1e-5),
                     3);
    g.backward(out);
    GradMap grads = zeros_like(p);
    g.accumulate_param_grads(grads);
    return std::make_pair(g.value(out)[0], grads);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(ParamStore, SortedAndDisjoint) {
  ParamStore p;
  p.add_learnable("z", Tensor::vector({1}));
  p.add_learnable("a", Tensor::vector({2}));
  p.add_fixed("m", Tensor::vector({3}));
  std::vector<std::string> names;
  for (const auto& [name, t] : p.learnable()) names.push_back(name);
  EXPECT_EQ(names, (std::vector<std::string>{"a", "z"}));
  EXPECT_THROW(p.add_fixed("a", Tensor::vector({1})), Error);
  EXPECT_THROW(p.add_learnable("m", Tensor::vector({1})), Error);
  EXPECT_THROW(p.add_learnable("a", Tensor::vector({1})), Error);
  EXPECT_FALSE(p.is_learnable("m"));
  EXPECT_EQ(p.learnable_count(), 2u);
}

TEST(Checkpoint, BitExactRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "treetx_ckpt_test";
  std::filesystem::create_directories(dir);
  Rng rng(6);
  ParamStore p;
  p.add_learnable("w", random_tensor(rng, {3, 5}, 1e6));
  p.add_learnable("v", Tensor::vector({0.1, -0.0, 1e-310, std::nextafter(1.0, 2.0)}));
  p.add_fixed("pos", random_tensor(rng, {4, 2}));
  const nlohmann::json meta = {{"note", "x"}};
  save_checkpoint(p, dir / "m.json", meta);
  const Checkpoint back = load_checkpoint(dir / "m.json");
  EXPECT_EQ(back.params, p);
  EXPECT_TRUE(std::signbit(back.params.get("v")[1]));
  EXPECT_EQ(back.metadata.at("note"), "x");

  nlohmann::json manifest;
  std::ifstream(dir / "m.json") >> manifest;
  for (const auto& t : manifest.at("tensors")) EXPECT_EQ(t.at("dtype"), "f64");
  manifest["version"] = kCheckpointVersion + 1;
  std::ofstream(dir / "m.json") << manifest.dump();
  EXPECT_THROW(load_checkpoint(dir / "m.json"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace treetx::num
