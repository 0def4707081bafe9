#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support/helpers.hpp"
#include "treetx/core/errors.hpp"
#include "treetx/minilang/grammar.hpp"
#include "treetx/model/heads.hpp"
#include "treetx/model/init.hpp"
#include "treetx/model/tree_transformer.hpp"
#include "treetx/numerics/graph.hpp"
#include "treetx/numerics/ops.hpp"
#include "treetx/training/corpus.hpp"
#include "treetx/training/losses.hpp"
#include "treetx/training/optimizer.hpp"
#include "treetx/training/trainer.hpp"
#include "treetx/training/verify.hpp"

namespace treetx::training {
namespace {

namespace fs = std::filesystem;
using model::HeadKind;
using num::Tensor;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("treetx_training_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.dim = 8;
  c.heads = 2;
  c.epochs = 2;
  c.batch_size = 4;
  c.warmup_steps = 5;
  c.base_lr = 0.01;
  c.seed = 3;
  c.max_children = 16;
  return c;
}

Corpus small_synthetic(HeadKind task, std::uint64_t seed, std::size_t trees = 12) {
  SyntheticOptions o;
  o.task = task;
  o.trees = trees;
  o.seed = seed;
  return synthetic_corpus(o);
}

// ---------------------------------------------------------------- schedule

TEST(LrSchedule, Examples) {
  EXPECT_EQ(lr_schedule(0, 0.002, 2000), 0.0);
  EXPECT_DOUBLE_EQ(lr_schedule(2000, 0.002, 2000), 0.002);
  EXPECT_DOUBLE_EQ(lr_schedule(1000, 0.002, 2000), 0.001);
  EXPECT_DOUBLE_EQ(lr_schedule(50000, 0.002, 2000), 0.002);
  EXPECT_THROW(lr_schedule(1, 0.002, 0), Error);
  EXPECT_THROW(lr_schedule(1, 0.0, 10), Error);
}

TEST(LrSchedule, MonotoneAndContinuous) {
  double prev = -1.0;
  for (std::size_t s = 0; s <= 4000; ++s) {
    const double lr = lr_schedule(s, 0.002, 2000);
    EXPECT_GE(lr, prev);
    if (s > 0) EXPECT_LE(lr - prev, 0.002 / 2000 + 1e-18);
    prev = lr;
  }
}

// ---------------------------------------------------------------- adam

num::ParamStore scalar_store(double w) {
  num::ParamStore p;
  p.add_learnable("w", Tensor::vector({w}));
  return p;
}

num::GradMap scalar_grad(double g) { return {{"w", Tensor::vector({g})}}; }

TEST(Adam, ZeroGradientLeavesParameters) {
  auto p = scalar_store(1.5);
  Adam adam(p);
  for (int i = 0; i < 5; ++i) adam.step(p, scalar_grad(0.0), 0.1);
  EXPECT_EQ(p.get("w")[0], 1.5);
}

TEST(Adam, FirstStepMovesByLr) {
  auto p = scalar_store(0.0);
  Adam adam(p);
  adam.step(p, scalar_grad(1.0), 0.1);
  // m_hat = 1, v_hat = 1, step = 0.1 / (1 + 1e-8).
  EXPECT_NEAR(p.get("w")[0], -0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, MatchesHandRolledUpdates) {
  auto p = scalar_store(0.0);
  Adam adam(p);
  double w = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * (w - 3.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    adam.step(p, scalar_grad(2.0 * (p.get("w")[0] - 3.0)), 0.1);
    ASSERT_NEAR(p.get("w")[0], w, 1e-12) << t;
  }
  EXPECT_LT(std::abs(p.get("w")[0] - 3.0), 0.1);
}

TEST(Adam, ZeroLrIsBitIdentical) {
  const model::ModelConfig c = testing::small_config();
  auto p = model::init_params(c, 1);
  const auto before = p;
  Adam adam(p);
  num::GradMap grads = num::zeros_like(p);
  Rng rng(2);
  for (auto& [name, t] : grads)
    for (double& v : t.data()) v = rng.uniform(-1, 1);
  adam.step(p, grads, 0.0);
  EXPECT_EQ(p, before);
}

TEST(Adam, NonFiniteGradientAborts) {
  num::ParamStore p;
  p.add_learnable("a", Tensor::vector({1.0}));
  p.add_learnable("b", Tensor::vector({1.0, 2.0}));
  Adam adam(p);
  num::GradMap g{{"a", Tensor::vector({0.5})}, {"b", Tensor::vector({0.1, std::nan("")})}};
  try {
    adam.step(p, g, 0.1);
    FAIL();
  } catch (const NonFiniteGradient& e) {
    EXPECT_EQ(e.param(), "b");
    EXPECT_EQ(e.index(), 1u);
  }
  EXPECT_EQ(p.get("a")[0], 1.0);
}

// ---------------------------------------------------------------- losses

TEST(Losses, Examples) {
  const std::vector<double> onehot{0.0, 80.0, 0.0};
  EXPECT_LT(loss_classify(onehot, 1), 1e-30);
  const std::vector<double> uniform(7, 0.25);
  EXPECT_NEAR(loss_classify(uniform, 3), std::log(7.0), 1e-15);
  EXPECT_THROW(loss_classify(uniform, 7), Error);

  const std::vector<double> ptr{0.3, -1.0, 2.0};
  const std::vector<double> rep{1.0, 0.5, -0.2, 0.0};
  EXPECT_DOUBLE_EQ(loss_wrongop(ptr, rep, 2, 1), cross_entropy(ptr, 2) + cross_entropy(rep, 1));

  const std::vector<std::vector<double>> rows{{0, 0}, {1, 3}};
  const std::vector<std::size_t> labels{0, 1};
  EXPECT_DOUBLE_EQ(loss_node_classify(rows, labels), (std::log(2.0) + cross_entropy(rows[1], 1)) / 2.0);
}

TEST(Losses, GraphLossesMatchPlainOnes) {
  num::Graph g;
  const Tensor logits = Tensor::matrix(2, 3, {0.1, 0.2, -0.4, 2.0, 0.0, 1.0});
  const std::vector<std::int64_t> labels{2, 0};
  const num::Var l = classify_loss(g, g.constant(logits), labels);
  EXPECT_NEAR(g.value(l)[0], (loss_classify(logits.row(0), 2) + loss_classify(logits.row(1), 0)) / 2.0, 1e-15);

  model::PointerScores ps;
  ps.scores = g.constant(Tensor::matrix(5, 1, {0.3, -1.0, 2.0, 0.5, 0.6}));
  ps.segments = {{0, 3}, {3, 2}};
  const Tensor rep = Tensor::matrix(2, 2, {1.0, 0.0, 0.2, 0.3});
  const std::vector<std::int64_t> targets{2, 0}, ops{1, 1};
  const WrongOpLoss w = wrongop_loss(g, ps, g.constant(rep), targets, ops);
  const std::vector<double> p0{0.3, -1.0, 2.0}, p1{0.5, 0.6};
  const double expected = (loss_wrongop(p0, rep.row(0), 2, 1) + loss_wrongop(p1, rep.row(1), 0, 1)) / 2.0;
  EXPECT_NEAR(g.value(w.total)[0], expected, 1e-15);
  EXPECT_NEAR(g.value(w.total)[0], g.value(w.pointer)[0] + g.value(w.repair)[0], 1e-15);
}

// ---------------------------------------------------------------- corpus

TEST(Corpus, RoundTripIsByteIdentical) {
  const fs::path dir = scratch("corpus");
  for (const Corpus& c : {make_classify_corpus(3, 4, 5), make_wrongop_corpus(12, 2, 6),
                          make_classify_corpus(2, 3, 7, true)}) {
    save_corpus(c, dir / "a");
    const Corpus back = load_corpus(dir / "a");
    EXPECT_EQ(back.task, c.task);
    EXPECT_EQ(back.trees, c.trees);
    EXPECT_EQ(back.sources, c.sources);
    EXPECT_EQ(back.candidates, c.candidates);
    EXPECT_EQ(back.classes, c.classes);
    EXPECT_EQ(back.vocab, c.vocab);
    ASSERT_EQ(back.faults.size(), c.faults.size());
    for (std::size_t i = 0; i < c.faults.size(); ++i) {
      EXPECT_EQ(back.faults[i].target, c.faults[i].target);
      EXPECT_EQ(back.faults[i].source_hash, c.faults[i].source_hash);
    }
    save_corpus(back, dir / "b");
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
      };
      EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / entry.path().filename())) << entry.path();
    }
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
  }
  fs::remove_all(dir);
}

TEST(Corpus, BaselineIsMeanInverseCandidateCount) {
  const Corpus c = make_wrongop_corpus(40, 2, 8);
  double sum = 0.0;
  for (const auto& t : c.trees) sum += 1.0 / static_cast<double>(pointer_candidates(t, c.vocab).size());
  EXPECT_DOUBLE_EQ(random_pointer_baseline(c), sum / 40.0);
}

TEST(Corpus, CheckCatchesBadLabels) {
  Corpus c = make_classify_corpus(2, 2, 1);
  c.trees[0].label = 5;
  EXPECT_THROW(c.check(), Error);
  Corpus w = make_wrongop_corpus(3, 2, 1);
  w.faults[0].target = 0;
  EXPECT_THROW(w.check(), Error);
}

// ---------------------------------------------------------------- train / eval

TEST(Train, DeterministicAndWritesArtifacts) {
  const Corpus train_set = small_synthetic(HeadKind::kClassify, 1);
  const Corpus eval_set = small_synthetic(HeadKind::kClassify, 2);
  const fs::path dir = scratch("run");
  RunOutputs out{dir, {{"epochs", 2}}};
  const TrainResult a = train(tiny_config(), train_set, &eval_set, &out);
  const TrainResult b = train(tiny_config(), train_set, &eval_set);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(*a.eval, *b.eval);
  ASSERT_EQ(a.curve.size(), 2u);
  EXPECT_EQ(a.curve[1].steps, 6u);
  EXPECT_DOUBLE_EQ(a.curve[1].lr, lr_schedule(6, 0.01, 5));
  for (const char* f : {"manifest.json", "metrics.csv", "summary.json", "predictions.jsonl", "model.json", "model.bin"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  nlohmann::json manifest;
  std::ifstream(dir / "manifest.json") >> manifest;
  EXPECT_EQ(manifest.at("train_config").at("seed"), 3);
  EXPECT_EQ(manifest.at("train_corpus").at("vocabulary_digest"), hex_digest(train_set.vocab.digest()));
  EXPECT_EQ(manifest.at("version"), code_version());
  const Metrics re = evaluate_checkpoint(dir / "model.json", eval_set);
  EXPECT_EQ(re, *a.eval);
  fs::remove_all(dir);
}

TEST(Train, SeedChangesTrajectory) {
  const Corpus train_set = small_synthetic(HeadKind::kClassify, 1);
  TrainConfig c = tiny_config();
  const TrainResult a = train(c, train_set);
  c.seed = 4;
  const TrainResult b = train(c, train_set);
  EXPECT_NE(a.params, b.params);
}

TEST(Train, RejectsBadConfig) {
  const Corpus train_set = small_synthetic(HeadKind::kClassify, 1);
  TrainConfig c = tiny_config();
  c.precision = "f32";
  EXPECT_THROW(train(c, train_set), Error);
  c = tiny_config();
  c.warmup_steps = 0;
  EXPECT_THROW(train(c, train_set), Error);
  c = tiny_config();
  c.max_children = 1;
  EXPECT_THROW(train(c, train_set), Error);
}

TEST(Train, LearnsSeparableTask) {
  // Label = whether the root carries token k1; the model has to find it.
  Corpus c = small_synthetic(HeadKind::kClassify, 9, 60);
  c.classes = 2;
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.trees[i].nodes[0].token_id = static_cast<std::int32_t>(1 + i % 2);
    c.trees[i].label = static_cast<std::int32_t>(i % 2);
  }
  TrainConfig cfg = tiny_config();
  cfg.epochs = 6;
  cfg.warmup_steps = 10;
  const TrainResult r = train(cfg, c);
  EXPECT_GE(r.eval->accuracy, 0.9);
}

TEST(Evaluate, NeverMutatesAndIgnoresThreads) {
  const Corpus corpus = small_synthetic(HeadKind::kWrongOp, 3, 30);
  model::ModelConfig c = testing::small_config(8, 2, HeadKind::kWrongOp);
  c.classes = corpus.classes;
  const auto params = model::init_params(c, 2);
  const auto copy = params;
  std::vector<Prediction> p1, p4;
  const Metrics m1 = evaluate(params, c, corpus, 1, &p1);
  const Metrics m4 = evaluate(params, c, corpus, 4, &p4);
  EXPECT_EQ(params, copy);
  EXPECT_EQ(m1, m4);
  ASSERT_EQ(p1.size(), p4.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    EXPECT_EQ(p1[i].predicted, p4[i].predicted);
    EXPECT_EQ(p1[i].predicted_op, p4[i].predicted_op);
  }
  EXPECT_LE(m1.joint_acc, m1.loc_acc);
  EXPECT_DOUBLE_EQ(m1.random_baseline, random_pointer_baseline(corpus));
}

TEST(Evaluate, RecountFromLogMatchesExactly) {
  const fs::path dir = scratch("recount");
  for (HeadKind task : {HeadKind::kClassify, HeadKind::kWrongOp, HeadKind::kNodeClassify}) {
    const Corpus corpus = small_synthetic(task, 11, 25);
    model::ModelConfig c = testing::small_config(8, 2, task);
    c.classes = corpus.classes;
    std::vector<Prediction> preds;
    const Metrics m = evaluate(model::init_params(c, 5), c, corpus, 2, &preds);
    write_predictions(dir / "p.jsonl", preds);
    const auto back = read_predictions(dir / "p.jsonl");
    // Independent count over the raw log.
    std::size_t hit = 0, loc = 0, joint = 0;
    std::ifstream in(dir / "p.jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      ++lines;
      const bool located = j.at("predicted") == j.at("gold");
      hit += located;
      if (task == HeadKind::kWrongOp) {
        loc += located;
        joint += located && j.at("predicted_op") == j.at("gold_op");
      }
    }
    const Metrics r = recount(task, back);
    if (task == HeadKind::kWrongOp) {
      EXPECT_EQ(m.loc_acc, static_cast<double>(loc) / static_cast<double>(lines));
      EXPECT_EQ(m.joint_acc, static_cast<double>(joint) / static_cast<double>(lines));
      EXPECT_EQ(r.loc_acc, m.loc_acc);
      EXPECT_EQ(r.joint_acc, m.joint_acc);
    } else {
      EXPECT_EQ(m.accuracy, static_cast<double>(hit) / static_cast<double>(lines));
      EXPECT_EQ(r.accuracy, m.accuracy);
    }
  }
  fs::remove_all(dir);
}

TEST(Evaluate, CheckpointRefusesMismatchedCorpus) {
  const fs::path dir = scratch("digest");
  const Corpus train_set = make_classify_corpus(2, 3, 1);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  RunOutputs out{dir, {}};
  train(cfg, train_set, nullptr, &out);
  EXPECT_NO_THROW(evaluate_checkpoint(dir / "model.json", train_set));

  Corpus other = train_set;
  other.vocab.tokens.intern("extra");
  EXPECT_THROW(evaluate_checkpoint(dir / "model.json", other), DigestMismatch);
  EXPECT_THROW(evaluate_checkpoint(dir / "model.json", make_classify_corpus(3, 2, 1)), DigestMismatch);
  EXPECT_THROW(evaluate_checkpoint(dir / "model.json", make_wrongop_corpus(3, 2, 1)), DigestMismatch);

  nlohmann::json manifest;
  std::ifstream(dir / "model.json") >> manifest;
  manifest["version"] = 99;
  std::ofstream(dir / "model.json") << manifest.dump();
  EXPECT_THROW(evaluate_checkpoint(dir / "model.json", train_set), Error);
  fs::remove_all(dir);
}

TEST(Evaluate, TrainingSetAboveChance) {
  const Corpus corpus = make_classify_corpus(4, 12, 3);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 4;
  cfg.warmup_steps = 4;
  const TrainResult r = train(cfg, corpus);
  EXPECT_GE(r.eval->accuracy, 1.0 / 4.0);
}

TEST(LeafLogits, EqualSymbolsEqualScoresWithoutTopDown) {
  const Corpus corpus = make_wrongop_corpus(40, 2, 12);
  TrainConfig cfg = tiny_config();
  cfg.ablation = model::Ablation::kTopDown;
  cfg.epochs = 1;
  const TrainResult r = train(cfg, corpus);
  std::size_t pairs = 0;
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    num::Graph g;
    model::BoundParams p(g, r.params, r.model, false);
    const model::Encoding enc = model::encode(p, corpus.trees[t]);
    const auto ps = model::pointer_scores(p, enc, {corpus.candidates[t]});
    const Tensor& s = g.value(ps.scores);
    const auto& cands = corpus.candidates[t];
    for (std::size_t a = 0; a < cands.size(); ++a)
      for (std::size_t b = a + 1; b < cands.size(); ++b) {
        const auto& na = corpus.trees[t].node(cands[a]);
        const auto& nb = corpus.trees[t].node(cands[b]);
        if (na.type_id == nb.type_id && na.token_id == nb.token_id) {
          EXPECT_EQ(s[a], s[b]);
          ++pairs;
        }
      }
  }
  EXPECT_GT(pairs, 0u);
}

TEST(GradCheck, MultiSampleBatches) {
  for (HeadKind task : {HeadKind::kClassify, HeadKind::kWrongOp, HeadKind::kNodeClassify}) {
    SyntheticOptions o;
    o.task = task;
    o.trees = 3;
    o.min_nodes = 5;
    o.max_nodes = 12;
    o.seed = 21;
    const Corpus corpus = synthetic_corpus(o);
    model::ModelConfig c = testing::small_config(8, 2, task);
    c.classes = corpus.classes;
    for (auto mode : {model::ExecutionMode::kScheduled, model::ExecutionMode::kNaive}) {
      const auto report = grad_check_model(c, corpus, 4, 1e-5, mode);
      EXPECT_EQ(testing::grad_check_problem(report), "") << model::to_string(task);
    }
  }
}

}  // namespace
}  // namespace treetx::training
