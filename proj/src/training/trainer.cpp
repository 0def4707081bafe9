#include "treetx/training/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "treetx/core/random.hpp"
#include "treetx/model/heads.hpp"
#include "treetx/model/init.hpp"
#include "treetx/numerics/checkpoint.hpp"
#include "treetx/training/losses.hpp"

#ifndef TREETX_VERSION
#define TREETX_VERSION "unknown"
#endif

namespace treetx::training {

namespace fs = std::filesystem;
using model::HeadKind;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kEvalBatch = 32;

std::vector<const SyntaxTree*> trees_of(const Corpus& corpus, std::span<const std::size_t> indices) {
  std::vector<const SyntaxTree*> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(&corpus.trees.at(i));
  return out;
}

std::vector<model::NodeSlot> labeled_nodes(const Corpus& corpus, std::span<const std::size_t> indices,
                                           std::vector<std::int64_t>* labels) {
  std::vector<model::NodeSlot> nodes;
  for (std::size_t t = 0; t < indices.size(); ++t) {
    for (const auto& [id, label] : corpus.trees.at(indices[t]).node_labels) {
      nodes.push_back({t, id});
      if (labels) labels->push_back(label);
    }
  }
  return nodes;
}

std::int64_t offset_of(const std::vector<NodeId>& candidates, NodeId node) {
  auto it = std::find(candidates.begin(), candidates.end(), node);
  if (it == candidates.end()) throw Error("node " + std::to_string(node) + " is not a candidate");
  return it - candidates.begin();
}

std::vector<double> row_of(const num::Tensor& t, std::size_t r) {
  auto row = t.row(r);
  return {row.begin(), row.end()};
}

// Forward-only predictions for one batch; appends in sample order.
struct BatchOutcome {
  std::vector<double> losses;  // per sample (node task: per labeled node)
  std::vector<Prediction> predictions;
};

BatchOutcome predict_batch(const num::ParamStore& params, const model::ModelConfig& cfg,
                           const Corpus& corpus, std::span<const std::size_t> indices) {
  num::Graph g;
  model::BoundParams p(g, params, cfg, false);
  const model::Encoding enc = model::encode(p, trees_of(corpus, indices));
  BatchOutcome out;
  switch (cfg.head) {
    case HeadKind::kClassify: {
      const num::Tensor& logits = g.value(model::classify_logits(p, model::pool(p, enc)));
      for (std::size_t t = 0; t < indices.size(); ++t) {
        const auto row = row_of(logits, t);
        const auto gold = static_cast<std::size_t>(*corpus.trees[indices[t]].label);
        out.losses.push_back(loss_classify(row, gold));
        Prediction pr;
        pr.sample = indices[t];
        pr.predicted = static_cast<std::int64_t>(model::argmax(row));
        pr.gold = static_cast<std::int64_t>(gold);
        out.predictions.push_back(pr);
      }
      break;
    }
    case HeadKind::kWrongOp: {
      std::vector<std::vector<NodeId>> candidates;
      for (std::size_t i : indices) candidates.push_back(corpus.candidates.at(i));
      const model::PointerScores ptr = model::pointer_scores(p, enc, candidates);
      const num::Tensor& scores = g.value(ptr.scores);
      std::vector<std::size_t> located(indices.size());
      std::vector<model::NodeSlot> nodes;  // located node then gold node, per sample
      for (std::size_t t = 0; t < indices.size(); ++t) {
        const auto& seg = ptr.segments[t];
        std::span<const double> s(scores.raw() + seg.begin, seg.count);
        located[t] = model::argmax(s);
        nodes.push_back({t, candidates[t][located[t]]});
        nodes.push_back({t, corpus.faults.at(indices[t]).target});
      }
      const num::Tensor& repair = g.value(model::repair_logits(p, enc, nodes));
      for (std::size_t t = 0; t < indices.size(); ++t) {
        const auto& seg = ptr.segments[t];
        const OperatorFault& fault = corpus.faults.at(indices[t]);
        std::span<const double> s(scores.raw() + seg.begin, seg.count);
        const auto gold_offset = static_cast<std::size_t>(offset_of(candidates[t], fault.target));
        out.losses.push_back(loss_wrongop(s, row_of(repair, 2 * t + 1), gold_offset,
                                          static_cast<std::size_t>(fault.original_op)));
        Prediction pr;
        pr.sample = indices[t];
        pr.predicted = candidates[t][located[t]];
        pr.gold = fault.target;
        pr.predicted_op = static_cast<std::int64_t>(model::argmax(row_of(repair, 2 * t)));
        pr.gold_op = fault.original_op;
        pr.candidates = candidates[t].size();
        out.predictions.push_back(pr);
      }
      break;
    }
    case HeadKind::kNodeClassify: {
      std::vector<std::int64_t> labels;
      const auto nodes = labeled_nodes(corpus, indices, &labels);
      if (nodes.empty()) break;
      const num::Tensor& logits = g.value(model::node_logits(p, enc, nodes));
      for (std::size_t r = 0; r < nodes.size(); ++r) {
        const auto row = row_of(logits, r);
        out.losses.push_back(cross_entropy(row, static_cast<std::size_t>(labels[r])));
        Prediction pr;
        pr.sample = indices[nodes[r].tree];
        pr.node = nodes[r].node;
        pr.predicted = static_cast<std::int64_t>(model::argmax(row));
        pr.gold = labels[r];
        out.predictions.push_back(pr);
      }
      break;
    }
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json corpus_summary(const Corpus& c) {
  return {{"task", std::string(model::to_string(c.task))},
          {"count", c.size()},
          {"classes", c.classes},
          {"vocabulary_digest", hex_digest(c.vocab.digest())},
          {"meta", c.meta}};
}

json checkpoint_metadata(const TrainConfig& config, const model::ModelConfig& m, const Corpus& corpus,
                         std::size_t epoch) {
  return {{"model", m.to_json()},
          {"task", std::string(model::to_string(corpus.task))},
          {"classes", corpus.classes},
          {"vocabulary_digest", hex_digest(corpus.vocab.digest())},
          {"train_config", config.to_json()},
          {"epoch", epoch},
          {"version", code_version()}};
}

std::string csv_number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

std::string code_version() { return TREETX_VERSION; }

void TrainConfig::validate() const {
  if (!(base_lr > 0.0)) throw Error("base_lr must be positive");
  if (warmup_steps < 1) throw Error("warmup_steps must be at least 1");
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (precision != "f64") {
    throw Error("precision '" + precision + "' is not available; this build trains in f64 only");
  }
  if (threads < 1) throw Error("threads must be at least 1");
}

json TrainConfig::to_json() const {
  return {{"base_lr", base_lr},
          {"warmup_steps", warmup_steps},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed},
          {"precision", precision},
          {"ablation", std::string(model::to_string(ablation))},
          {"checkpoint_every", checkpoint_every},
          {"dim", dim},
          {"heads", heads},
          {"ffn_hidden", ffn_hidden},
          {"max_children", max_children},
          {"full_width_scaling", full_width_scaling},
          {"adam", adam.to_json()}};
}

model::ModelConfig make_model_config(const TrainConfig& config, const Corpus& corpus) {
  model::ModelConfig m;
  m.dim = config.dim;
  m.heads = config.heads;
  m.ffn_hidden = config.ffn_hidden;
  m.max_children = config.max_children;
  m.full_width_scaling = config.full_width_scaling;
  m.head = corpus.task;
  m.classes = corpus.classes;
  m.type_vocab = corpus.vocab.types.size();
  m.token_vocab = corpus.vocab.tokens.size();
  m.apply(config.ablation);
  m.validate();
  return m;
}

json Metrics::to_json() const {
  json j{{"task", std::string(model::to_string(task))}, {"samples", samples}, {"mean_loss", mean_loss}};
  switch (task) {
    case HeadKind::kClassify: j["accuracy"] = accuracy; break;
    case HeadKind::kNodeClassify:
      j["accuracy"] = accuracy;
      j["labeled_nodes"] = labeled_nodes;
      break;
    case HeadKind::kWrongOp:
      j["loc_acc"] = loc_acc;
      j["joint_acc"] = joint_acc;
      j["random_baseline"] = random_baseline;
      break;
  }
  return j;
}

ordered_json Prediction::to_json() const {
  ordered_json j;
  j["sample"] = sample;
  if (node) j["node"] = *node;
  j["predicted"] = predicted;
  j["gold"] = gold;
  if (gold_op >= 0) {
    j["predicted_op"] = predicted_op;
    j["gold_op"] = gold_op;
    j["candidates"] = candidates;
  }
  return j;
}

Prediction Prediction::from_json(const json& j) {
  Prediction p;
  p.sample = j.at("sample");
  if (j.contains("node")) p.node = j.at("node").get<NodeId>();
  p.predicted = j.at("predicted");
  p.gold = j.at("gold");
  if (j.contains("gold_op")) {
    p.predicted_op = j.at("predicted_op");
    p.gold_op = j.at("gold_op");
    p.candidates = j.at("candidates");
  }
  return p;
}

num::Var batch_loss(model::BoundParams& p, const Corpus& corpus, std::span<const std::size_t> indices,
                    const model::ForwardOptions& options) {
  num::Graph& g = p.graph();
  const model::Encoding enc = model::encode(p, trees_of(corpus, indices), options);
  switch (p.config().head) {
    case HeadKind::kClassify: {
      std::vector<std::int64_t> labels;
      for (std::size_t i : indices) {
        const auto& label = corpus.trees.at(i).label;
        if (!label) throw Error("tree " + std::to_string(i) + " has no label");
        labels.push_back(*label);
      }
      return classify_loss(g, model::classify_logits(p, model::pool(p, enc)), labels);
    }
    case HeadKind::kWrongOp: {
      std::vector<std::vector<NodeId>> candidates;
      std::vector<std::int64_t> targets;
      std::vector<std::int64_t> repair_labels;
      std::vector<model::NodeSlot> gold;
      for (std::size_t t = 0; t < indices.size(); ++t) {
        const OperatorFault& fault = corpus.faults.at(indices[t]);
        candidates.push_back(corpus.candidates.at(indices[t]));
        targets.push_back(offset_of(candidates.back(), fault.target));
        repair_labels.push_back(fault.original_op);
        gold.push_back({t, fault.target});
      }
      const model::PointerScores ptr = model::pointer_scores(p, enc, candidates);
      return wrongop_loss(g, ptr, model::repair_logits(p, enc, gold), targets, repair_labels).total;
    }
    case HeadKind::kNodeClassify: {
      std::vector<std::int64_t> labels;
      const auto nodes = labeled_nodes(corpus, indices, &labels);
      if (nodes.empty()) throw Error("batch has no labeled nodes");
      return node_classify_loss(g, model::node_logits(p, enc, nodes), labels);
    }
  }
  throw Error("unknown task");
}

Metrics recount(HeadKind task, std::span<const Prediction> predictions) {
  Metrics m;
  m.task = task;
  std::size_t correct = 0;
  std::size_t located = 0;
  std::size_t joint = 0;
  double baseline = 0.0;
  std::size_t samples = 0;
  std::optional<std::size_t> last_sample;
  for (const Prediction& p : predictions) {
    if (!last_sample || *last_sample != p.sample) ++samples;
    last_sample = p.sample;
    if (p.predicted == p.gold) {
      ++correct;
      ++located;
      if (p.predicted_op == p.gold_op) ++joint;
    }
    if (p.candidates > 0) baseline += 1.0 / static_cast<double>(p.candidates);
  }
  const auto n = static_cast<double>(predictions.size());
  m.samples = samples;
  if (predictions.empty()) return m;
  switch (task) {
    case HeadKind::kClassify: m.accuracy = static_cast<double>(correct) / n; break;
    case HeadKind::kNodeClassify:
      m.accuracy = static_cast<double>(correct) / n;
      m.labeled_nodes = predictions.size();
      break;
    case HeadKind::kWrongOp:
      m.loc_acc = static_cast<double>(located) / n;
      m.joint_acc = static_cast<double>(joint) / n;
      m.random_baseline = baseline / n;
      break;
  }
  return m;
}

Metrics evaluate(const num::ParamStore& params, const model::ModelConfig& cfg, const Corpus& corpus,
                 std::size_t threads, std::vector<Prediction>* predictions) {
  if (cfg.head != corpus.task) throw Error("model head does not match the corpus task");
  if (corpus.size() == 0) throw Error("cannot evaluate an empty corpus");
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < corpus.size(); begin += kEvalBatch) {
    std::vector<std::size_t> b(std::min(kEvalBatch, corpus.size() - begin));
    std::iota(b.begin(), b.end(), begin);
    batches.push_back(std::move(b));
  }
  std::vector<BatchOutcome> outcomes(batches.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(std::max<std::size_t>(threads, 1));
  auto worker = [&](std::size_t w) {
    try {
      for (std::size_t b = next++; b < batches.size(); b = next++) {
        outcomes[b] = predict_batch(params, cfg, corpus, batches[b]);
      }
    } catch (...) {
      errors[w] = std::current_exception();
      next = batches.size();
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), batches.size());
  if (workers <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<Prediction> all;
  double loss = 0.0;
  std::size_t terms = 0;
  for (const BatchOutcome& o : outcomes) {
    for (double l : o.losses) loss += l;
    terms += o.losses.size();
    all.insert(all.end(), o.predictions.begin(), o.predictions.end());
  }
  Metrics m = recount(corpus.task, all);
  m.samples = corpus.size();
  m.mean_loss = terms == 0 ? 0.0 : loss / static_cast<double>(terms);
  if (predictions) *predictions = std::move(all);
  return m;
}

Metrics evaluate_checkpoint(const fs::path& manifest, const Corpus& corpus, std::size_t threads,
                            std::vector<Prediction>* predictions) {
  const num::Checkpoint ckpt = num::load_checkpoint(manifest);
  const json& meta = ckpt.metadata;
  if (!meta.contains("model") || !meta.contains("vocabulary_digest")) {
    throw Error(manifest.string() + " has no model metadata");
  }
  const std::string digest = hex_digest(corpus.vocab.digest());
  if (meta.at("vocabulary_digest").get<std::string>() != digest) {
    throw DigestMismatch("corpus vocabulary digest " + digest + " differs from the checkpoint's " +
                         meta.at("vocabulary_digest").get<std::string>());
  }
  if (meta.at("task").get<std::string>() != model::to_string(corpus.task)) {
    throw DigestMismatch("checkpoint was trained for task " + meta.at("task").get<std::string>());
  }
  if (meta.at("classes").get<std::size_t>() != corpus.classes) {
    throw DigestMismatch("checkpoint has " + std::to_string(meta.at("classes").get<std::size_t>()) +
                         " classes, corpus has " + std::to_string(corpus.classes));
  }
  const model::ModelConfig cfg = model::ModelConfig::from_json(meta.at("model"));
  return evaluate(ckpt.params, cfg, corpus, threads, predictions);
}

void write_predictions(const fs::path& path, std::span<const Prediction> predictions) {
  std::ostringstream out;
  for (const Prediction& p : predictions) out << p.to_json().dump() << '\n';
  write_text(path, out.str());
}

std::vector<Prediction> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<Prediction> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(Prediction::from_json(json::parse(line)));
  }
  return out;
}

TrainResult train(const TrainConfig& config, const Corpus& train_set, const Corpus* eval_set,
                  const RunOutputs* outputs, const Logger& log) {
  config.validate();
  if (train_set.size() == 0) throw Error("training corpus is empty");
  if (eval_set) {
    if (eval_set->vocab.digest() != train_set.vocab.digest()) {
      throw DigestMismatch("evaluation corpus vocabulary differs from the training corpus");
    }
    if (eval_set->task != train_set.task || eval_set->classes != train_set.classes) {
      throw DigestMismatch("evaluation corpus task or class count differs from the training corpus");
    }
  }
  if (config.ablation == model::Ablation::kTopDown && train_set.task == HeadKind::kWrongOp && log) {
    log("note: without top-down propagation, operator leaves only see their own embedding; "
        "the pointer cannot use context");
  }

  TrainResult result;
  result.model = make_model_config(config, train_set);
  result.params = model::init_params(result.model, Rng::derive(config.seed, 1));
  Rng shuffle(Rng::derive(config.seed, 2));
  Adam adam(result.params, config.adam);

  std::ofstream csv;
  if (outputs) {
    fs::create_directories(outputs->dir);
    ordered_json manifest;
    manifest["tool"] = "treetx";
    manifest["version"] = code_version();
    manifest["command"] = outputs->command;
    manifest["train_config"] = config.to_json();
    manifest["model_config"] = result.model.to_json();
    manifest["seeds"] = {{"run", config.seed},
                         {"init", Rng::derive(config.seed, 1)},
                         {"shuffle", Rng::derive(config.seed, 2)}};
    manifest["train_corpus"] = corpus_summary(train_set);
    if (eval_set) manifest["eval_corpus"] = corpus_summary(*eval_set);
    write_text(outputs->dir / "manifest.json", manifest.dump(2) + "\n");
    csv.open(outputs->dir / "metrics.csv", std::ios::binary);
    csv << "epoch,steps,lr,train_loss,eval_loss,eval_accuracy,eval_loc_acc,eval_joint_acc,seconds\n";
  }

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    double lr = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::span<const std::size_t> batch(order.data() + begin, end - begin);
      num::Graph g;
      model::BoundParams p(g, result.params, result.model);
      num::Var loss = batch_loss(p, train_set, batch);
      g.backward(loss);
      num::GradMap grads = num::zeros_like(result.params);
      g.accumulate_param_grads(grads);
      ++step;
      lr = lr_schedule(step, config.base_lr, config.warmup_steps);
      adam.step(result.params, grads, lr);
      loss_sum += g.value(loss)[0];
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = step;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    if (epoch == config.epochs) {
      result.eval = evaluate(result.params, result.model, eval_set ? *eval_set : train_set,
                             config.threads, &result.predictions);
      if (eval_set) rec.eval = result.eval;
    } else if (eval_set && config.eval_each_epoch) {
      rec.eval = evaluate(result.params, result.model, *eval_set, config.threads);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.curve.push_back(rec);

    if (log) {
      std::ostringstream line;
      line << "epoch " << epoch << " loss " << rec.train_loss << " lr " << lr;
      if (rec.eval) line << " eval " << rec.eval->to_json().dump();
      line << " (" << rec.seconds << " s)";
      log(line.str());
    }
    if (outputs) {
      const Metrics e = rec.eval.value_or(Metrics{});
      csv << epoch << ',' << step << ',' << csv_number(lr) << ',' << csv_number(rec.train_loss) << ','
          << (rec.eval ? csv_number(e.mean_loss) : "") << ','
          << (rec.eval && train_set.task != HeadKind::kWrongOp ? csv_number(e.accuracy) : "") << ','
          << (rec.eval && train_set.task == HeadKind::kWrongOp ? csv_number(e.loc_acc) : "") << ','
          << (rec.eval && train_set.task == HeadKind::kWrongOp ? csv_number(e.joint_acc) : "") << ','
          << csv_number(rec.seconds) << '\n';
      csv.flush();
      if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 && epoch != config.epochs) {
        num::save_checkpoint(result.params, outputs->dir / ("epoch-" + std::to_string(epoch) + ".json"),
                             checkpoint_metadata(config, result.model, train_set, epoch));
      }
    }
  }

  if (!result.eval) {
    result.eval = evaluate(result.params, result.model, eval_set ? *eval_set : train_set,
                           config.threads, &result.predictions);
  }
  const Metrics& final_metrics = *result.eval;
  if (outputs) {
    num::save_checkpoint(result.params, outputs->dir / "model.json",
                         checkpoint_metadata(config, result.model, train_set, config.epochs));
    write_predictions(outputs->dir / "predictions.jsonl", result.predictions);
    ordered_json summary;
    summary["epochs"] = config.epochs;
    summary["steps"] = step;
    summary["final_train_loss"] = result.curve.empty() ? 0.0 : result.curve.back().train_loss;
    summary["evaluated_on"] = eval_set ? "eval" : "train";
    summary["metrics"] = final_metrics.to_json();
    write_text(outputs->dir / "summary.json", summary.dump(2) + "\n");
  }
  return result;
}

}  // namespace treetx::training
