// treetx: synthesis, parsing, training, evaluation and verification front end.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "treetx/core/random_tree.hpp"
#include "treetx/core/tree_io.hpp"
#include "treetx/minilang/grammar.hpp"
#include "treetx/minilang/lexer.hpp"
#include "treetx/minilang/mutation.hpp"
#include "treetx/minilang/parser.hpp"
#include "treetx/model/init.hpp"
#include "treetx/numerics/checkpoint.hpp"
#include "treetx/scheduler/cost.hpp"
#include "treetx/scheduler/schedule.hpp"
#include "treetx/training/trainer.hpp"
#include "treetx/training/verify.hpp"

namespace {

using namespace treetx;
using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

// Reads flags from a JSON object: {"epochs": 5, "lr": 0.001, "no-topdown": true}.
// Nested objects address subcommands, arrays give repeated values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_configurable() && !opt->get_lnames().empty()) {
        const std::string name = opt->get_lnames().front();
        if (opt->count() > 0) {
          j[name] = opt->as<std::string>();
        } else if (default_also && !opt->get_default_str().empty()) {
          j[name] = opt->get_default_str();
        }
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        collect(value, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }
};

/// Errors leave as one JSON line on stderr.
int fail(const std::string& kind, const std::string& message, int code = 1) {
  std::cerr << ordered_json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

void log_line(const std::string& line) { std::cerr << line << std::endl; }

std::size_t default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

std::string default_data_dir() {
  const char* env = std::getenv("TREETX_DATA_DIR");
  return env ? env : "";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void add_config(CLI::App* app) {
  app->set_config("--config", "", "JSON file supplying any flag; the command line wins")
      ->check(CLI::ExistingFile);
  app->config_formatter(std::make_shared<JsonConfig>());
}

// ---------------------------------------------------------------- parse

struct ParseArgs {
  std::string file;
  bool emit_json = false;
  bool tokens = false;
};

int run_parse(const ParseArgs& a) {
  const std::string source = read_file(a.file);
  if (a.tokens) {
    for (const auto& t : minilang::tokenize(source)) {
      std::cout << ordered_json{{"kind", static_cast<int>(t.kind)}, {"text", t.text}, {"offset", t.offset}}.dump()
                << '\n';
    }
    return 0;
  }
  const SyntaxTree tree = minilang::parse(source);
  const Vocabulary& vocab = minilang::default_vocabulary();
  if (a.emit_json) {
    std::cout << tree_to_json_line(tree, vocab) << '\n';
    return 0;
  }
  const BranchingStats stats = branching_stats(tree);
  std::cout << ordered_json{{"nodes", stats.node_count},
                            {"depth", depth(tree)},
                            {"max_children", stats.max_children},
                            {"avg_children", stats.avg_children},
                            {"operators", minilang::operator_nodes(tree, vocab).size()}}
                   .dump()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthClassifyArgs {
  int classes = 8;
  int per_class = 500;
  std::uint64_t seed = 1;
  std::string out;
  bool node_labels = false;
};

struct SynthWrongOpArgs {
  int programs = 5000;
  int min_ops = 2;
  double mean_ops = 6.0;
  std::uint64_t seed = 1;
  std::string out;
};

void report_corpus(const training::Corpus& c, const fs::path& out) {
  std::cout << ordered_json{{"out", out.string()},
                            {"task", std::string(model::to_string(c.task))},
                            {"count", c.size()},
                            {"classes", c.classes},
                            {"vocabulary_digest", hex_digest(c.vocab.digest())}}
                   .dump()
            << '\n';
}

int run_synth_classify(const SynthClassifyArgs& a) {
  const auto corpus = training::make_classify_corpus(a.classes, a.per_class, a.seed, a.node_labels);
  training::save_corpus(corpus, a.out);
  report_corpus(corpus, a.out);
  return 0;
}

int run_synth_wrongop(const SynthWrongOpArgs& a) {
  const auto corpus = training::make_wrongop_corpus(a.programs, a.min_ops, a.seed, a.mean_ops);
  training::save_corpus(corpus, a.out);
  report_corpus(corpus, a.out);
  return 0;
}

// ---------------------------------------------------------------- train / eval

struct TrainArgs {
  std::string data = default_data_dir();
  std::string eval;
  std::string out;
  std::string task;
  std::string ablate = "none";
  training::TrainConfig config;
};

int run_train(TrainArgs& a, const CLI::App& app) {
  if (a.data.empty()) return fail("usage", "--data is required (or set TREETX_DATA_DIR)");
  a.config.ablation = model::parse_ablation(a.ablate);
  const training::Corpus train_set = training::load_corpus(a.data);
  if (!a.task.empty() && model::parse_head_kind(a.task) != train_set.task) {
    return fail("usage", "--task " + a.task + " does not match the corpus task " +
                             std::string(model::to_string(train_set.task)));
  }
  if (a.config.ablation == model::Ablation::kTopDown && train_set.task == model::HeadKind::kWrongOp) {
    log_line("note: without top-down propagation leaf candidates only see their own symbols; "
             "equal operators get equal pointer scores");
  }
  std::optional<training::Corpus> eval_set;
  if (!a.eval.empty()) eval_set = training::load_corpus(a.eval);

  training::RunOutputs outputs;
  outputs.dir = a.out;
  outputs.command = json::parse(app.config_to_str(true, false));
  const auto result = training::train(a.config, train_set, eval_set ? &*eval_set : nullptr,
                                      &outputs, log_line);
  ordered_json summary;
  summary["out"] = a.out;
  summary["checkpoint"] = (fs::path(a.out) / "model.json").string();
  summary["metrics"] = result.eval->to_json();
  std::cout << summary.dump() << '\n';
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data = default_data_dir();
  std::string predictions;
  std::size_t threads = default_threads();
};

int run_eval(const EvalArgs& a) {
  if (a.data.empty()) return fail("usage", "--data is required (or set TREETX_DATA_DIR)");
  const training::Corpus corpus = training::load_corpus(a.data);
  std::vector<training::Prediction> predictions;
  const auto metrics = training::evaluate_checkpoint(a.checkpoint, corpus, a.threads, &predictions);
  if (!a.predictions.empty()) training::write_predictions(a.predictions, predictions);
  std::cout << metrics.to_json().dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradCheckArgs {
  std::size_t dim = 8;
  std::size_t heads = 2;
  std::uint64_t seed = 1;
  std::string task = "all";
  std::string ablate = "none";
  std::size_t trees = 1;
  std::size_t min_nodes = 5;
  std::size_t max_nodes = 20;
  double eps = 1e-5;
  double tolerance = 1e-4;
  bool full_width_scaling = false;
};

int run_gradcheck(const GradCheckArgs& a) {
  std::vector<model::HeadKind> tasks;
  if (a.task == "all") {
    tasks = {model::HeadKind::kClassify, model::HeadKind::kWrongOp, model::HeadKind::kNodeClassify};
  } else {
    tasks = {model::parse_head_kind(a.task)};
  }
  bool ok = true;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    training::SyntheticOptions so;
    so.task = tasks[i];
    so.trees = a.trees;
    so.min_nodes = a.min_nodes;
    so.max_nodes = a.max_nodes;
    so.seed = Rng::derive(a.seed, 10 + i);
    const training::Corpus corpus = training::synthetic_corpus(so);
    model::ModelConfig cfg;
    cfg.dim = a.dim;
    cfg.heads = a.heads;
    cfg.max_children = so.max_children;
    cfg.full_width_scaling = a.full_width_scaling;
    cfg.head = corpus.task;
    cfg.classes = corpus.classes;
    cfg.type_vocab = corpus.vocab.types.size();
    cfg.token_vocab = corpus.vocab.tokens.size();
    cfg.apply(model::parse_ablation(a.ablate));
    const auto report = training::grad_check_model(cfg, corpus, Rng::derive(a.seed, 20 + i), a.eps);
    const bool passed = report.max_relative_error < a.tolerance;
    ok = ok && passed;
    std::size_t nodes = 0;
    for (const auto& t : corpus.trees) nodes += t.size();
    std::cout << ordered_json{{"task", std::string(model::to_string(corpus.task))},
                              {"nodes", nodes},
                              {"tensors", report.per_tensor.size()},
                              {"coordinates", report.coordinates},
                              {"max_relative_error", report.max_relative_error},
                              {"worst_param", report.worst_param},
                              {"worst_index", report.worst_index},
                              {"tolerance", a.tolerance},
                              {"passed", passed}}
                     .dump()
              << '\n';
  }
  return ok ? 0 : 2;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<std::size_t> sizes{100, 200, 400, 800};
  std::size_t trees = 8;
  std::size_t max_children = 4;
  std::size_t dim = 16;
  std::size_t heads = 2;
  std::uint64_t seed = 1;
  bool forward = true;
};

int run_bench(const BenchArgs& a) {
  std::cout << "size,trees,nodes,max_depth,attention_cells,full_attention_cells,ratio,parental_cells,"
               "measured_fraternal_cells,measured_parental_cells,peak_call_cells,sequential_steps,"
               "forward_seconds\n";
  for (std::size_t s = 0; s < a.sizes.size(); ++s) {
    Rng rng(Rng::derive(a.seed, s));
    RandomTreeOptions shape;
    shape.nodes = a.sizes[s];
    shape.max_children = a.max_children;
    std::vector<SyntaxTree> batch;
    std::size_t max_depth = 0;
    for (std::size_t t = 0; t < a.trees; ++t) {
      batch.push_back(random_tree(rng, shape));
      max_depth = std::max(max_depth, depth(batch.back()));
    }
    const sched::CostReport cost = sched::cost_report(batch);
    const sched::Schedule schedule = sched::build_schedule(batch);
    num::AttentionStats stats;
    double seconds = 0.0;
    if (a.forward) {
      model::ModelConfig cfg;
      cfg.dim = a.dim;
      cfg.heads = a.heads;
      cfg.max_children = std::max<std::size_t>(a.max_children, 1);
      cfg.type_vocab = shape.type_vocab;
      cfg.token_vocab = shape.token_vocab;
      const num::ParamStore params = model::init_params(cfg, Rng::derive(a.seed, 1000 + s));
      std::vector<const SyntaxTree*> ptrs;
      for (const auto& t : batch) ptrs.push_back(&t);
      const auto start = std::chrono::steady_clock::now();
      num::Graph g;
      model::BoundParams p(g, params, cfg, false);
      model::encode(p, ptrs);
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      stats = g.stats();
    }
    std::cout << a.sizes[s] << ',' << a.trees << ',' << cost.nodes << ',' << max_depth << ','
              << cost.attention_cells << ',' << cost.full_attention_cells << ','
              << static_cast<double>(cost.full_attention_cells) / static_cast<double>(cost.attention_cells)
              << ',' << cost.parental_cells << ',' << stats.fraternal_cells << ',' << stats.parental_cells
              << ',' << stats.peak_call_cells << ',' << schedule.sequential_steps() << ',' << seconds << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
  std::string checkpoint;
  std::string data;
};

int run_inspect(const InspectArgs& a) {
  if (a.checkpoint.empty() == a.data.empty()) {
    return fail("usage", "inspect needs exactly one of --checkpoint or --data");
  }
  ordered_json out;
  if (!a.checkpoint.empty()) {
    const num::Checkpoint ckpt = num::load_checkpoint(a.checkpoint);
    ordered_json tensors = ordered_json::array();
    std::size_t total = 0;
    for (const auto& [name, t] : ckpt.params.learnable()) {
      tensors.push_back({{"name", name}, {"shape", t.shape()}, {"learnable", true}});
      total += t.size();
    }
    for (const auto& [name, t] : ckpt.params.fixed()) {
      tensors.push_back({{"name", name}, {"shape", t.shape()}, {"learnable", false}});
    }
    out["learnable_parameters"] = total;
    out["tensors"] = tensors;
    out["metadata"] = ckpt.metadata;
  } else {
    const training::Corpus c = training::load_corpus(a.data);
    std::size_t nodes = 0, max_children = 0, max_depth = 0, operators = 0;
    for (const auto& t : c.trees) {
      const auto stats = branching_stats(t);
      nodes += stats.node_count;
      max_children = std::max(max_children, stats.max_children);
      max_depth = std::max(max_depth, depth(t));
    }
    for (const auto& cand : c.candidates) operators += cand.size();
    const double n = static_cast<double>(std::max<std::size_t>(c.size(), 1));
    out["task"] = std::string(model::to_string(c.task));
    out["count"] = c.size();
    out["classes"] = c.classes;
    out["mean_nodes"] = static_cast<double>(nodes) / n;
    out["max_children"] = max_children;
    out["max_depth"] = max_depth;
    if (c.task == model::HeadKind::kWrongOp) {
      out["mean_operators"] = static_cast<double>(operators) / n;
      out["random_pointer_baseline"] = training::random_pointer_baseline(c);
    }
    out["vocabulary_digest"] = hex_digest(c.vocab.digest());
    out["meta"] = c.meta;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-Transformer toolkit: synthesize corpora, train and verify models"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", training::code_version());

  ParseArgs parse_args;
  auto* parse = app.add_subcommand("parse", "Parse one mini-language program");
  parse->add_option("--file", parse_args.file, "Program source")->required()->check(CLI::ExistingFile);
  parse->add_flag("--emit-json", parse_args.emit_json, "Print the tree as one JSON line");
  parse->add_flag("--tokens", parse_args.tokens, "Print the token stream instead");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->require_subcommand(1);
  SynthClassifyArgs sc;
  auto* synth_classify = synth->add_subcommand("classify", "Program classification corpus");
  synth_classify->add_option("--classes", sc.classes, "Template families (2-8)")->check(CLI::Range(2, 8));
  synth_classify->add_option("--per-class", sc.per_class, "Programs per family")->check(CLI::PositiveNumber);
  synth_classify->add_option("--seed", sc.seed, "Random seed");
  synth_classify->add_option("--out", sc.out, "Output directory")->required();
  synth_classify->add_flag("--node-labels", sc.node_labels,
                           "Label identifier roles instead (node classification task)");
  add_config(synth_classify);

  SynthWrongOpArgs sw;
  auto* synth_wrongop = synth->add_subcommand("wrongop", "Wrong-operator localization corpus");
  synth_wrongop->add_option("--programs", sw.programs, "Number of programs")->check(CLI::PositiveNumber);
  synth_wrongop->add_option("--min-ops", sw.min_ops, "Minimum binary operators per program")
      ->check(CLI::Range(2, 1000));
  synth_wrongop->add_option("--mean-ops", sw.mean_ops, "Mean binary operators per program");
  synth_wrongop->add_option("--seed", sw.seed, "Random seed");
  synth_wrongop->add_option("--out", sw.out, "Output directory")->required();
  add_config(synth_wrongop);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model on a corpus directory");
  train->add_option("--data", ta.data, "Training corpus directory (default $TREETX_DATA_DIR)");
  train->add_option("--eval", ta.eval, "Held-out corpus directory");
  train->add_option("--out", ta.out, "Run directory")->required();
  train->add_option("--task", ta.task, "Expected task: classify, wrongop or node (default: from corpus)");
  train->add_option("--ablate", ta.ablate, "none, pe, fraternal, fraternal-keep-pe or topdown");
  train->add_option("--epochs", ta.config.epochs, "Training epochs");
  train->add_option("--batch-size", ta.config.batch_size, "Trees per optimizer step")->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.config.base_lr, "Base learning rate")->check(CLI::PositiveNumber);
  train->add_option("--warmup", ta.config.warmup_steps, "Linear warmup steps")->check(CLI::PositiveNumber);
  train->add_option("--dim", ta.config.dim, "Node state width d");
  train->add_option("--heads", ta.config.heads, "Attention heads");
  train->add_option("--ffn-hidden", ta.config.ffn_hidden, "FFN inner width (0: 4 * dim)");
  train->add_option("--max-children", ta.config.max_children, "Positional table length");
  train->add_flag("--full-width-scaling", ta.config.full_width_scaling,
                  "Scale scores by the full width instead of the head width");
  train->add_option("--checkpoint-every", ta.config.checkpoint_every, "Epochs between checkpoints (0: final only)");
  train->add_option("--precision", ta.config.precision, "Arithmetic precision (f64)");
  train->add_option("--seed", ta.config.seed, "Random seed");
  ta.config.threads = default_threads();
  train->add_option("--threads", ta.config.threads, "Evaluation worker threads")->check(CLI::PositiveNumber);
  add_config(train);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus directory");
  eval->add_option("--checkpoint", ea.checkpoint, "Checkpoint manifest (model.json)")
      ->required()->check(CLI::ExistingFile);
  eval->add_option("--data", ea.data, "Corpus directory (default $TREETX_DATA_DIR)");
  eval->add_option("--predictions", ea.predictions, "Write the prediction log here");
  eval->add_option("--threads", ea.threads, "Worker threads")->check(CLI::PositiveNumber);
  add_config(eval);

  GradCheckArgs ga;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the full model loss");
  gradcheck->add_option("--dim", ga.dim, "Node state width d");
  gradcheck->add_option("--heads", ga.heads, "Attention heads");
  gradcheck->add_option("--seed", ga.seed, "Random seed");
  gradcheck->add_option("--task", ga.task, "classify, wrongop, node or all");
  gradcheck->add_option("--ablate", ga.ablate, "none, pe, fraternal, fraternal-keep-pe or topdown");
  gradcheck->add_option("--trees", ga.trees, "Trees in the checked batch")->check(CLI::PositiveNumber);
  gradcheck->add_option("--min-nodes", ga.min_nodes, "Smallest tree")->check(CLI::PositiveNumber);
  gradcheck->add_option("--max-nodes", ga.max_nodes, "Largest tree")->check(CLI::PositiveNumber);
  gradcheck->add_option("--eps", ga.eps, "Central-difference step");
  gradcheck->add_option("--tolerance", ga.tolerance, "Largest accepted relative error");
  gradcheck->add_flag("--full-width-scaling", ga.full_width_scaling, "Scale scores by the full width");
  add_config(gradcheck);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Attention cost and forward timing on random trees (CSV)");
  bench->add_option("--sizes", ba.sizes, "Tree sizes")->delimiter(',');
  bench->add_option("--trees", ba.trees, "Trees per size")->check(CLI::PositiveNumber);
  bench->add_option("--max-children", ba.max_children, "Branching bound");
  bench->add_option("--dim", ba.dim, "Node state width d");
  bench->add_option("--heads", ba.heads, "Attention heads");
  bench->add_option("--seed", ba.seed, "Random seed");
  bench->add_flag("--forward,!--no-forward", ba.forward, "Run the forward pass to measure cells and time");
  add_config(bench);

  InspectArgs ia;
  auto* inspect = app.add_subcommand("inspect", "Describe a checkpoint or a corpus directory");
  inspect->add_option("--checkpoint", ia.checkpoint, "Checkpoint manifest")->check(CLI::ExistingFile);
  inspect->add_option("--data", ia.data, "Corpus directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), e.get_exit_code() == 0 ? 1 : e.get_exit_code());
  }

  try {
    if (*parse) return run_parse(parse_args);
    if (*synth_classify) return run_synth_classify(sc);
    if (*synth_wrongop) return run_synth_wrongop(sw);
    if (*train) return run_train(ta, *train);
    if (*eval) return run_eval(ea);
    if (*gradcheck) return run_gradcheck(ga);
    if (*bench) return run_bench(ba);
    if (*inspect) return run_inspect(ia);
  } catch (const minilang::LexError& e) {
    return fail("lex", e.what());
  } catch (const minilang::SyntaxError& e) {
    return fail("parse", e.what());
  } catch (const training::DigestMismatch& e) {
    return fail("digest-mismatch", e.what());
  } catch (const model::BranchingOverflow& e) {
    return fail("branching-overflow", e.what());
  } catch (const ValidationError& e) {
    return fail("validation", e.what());
  } catch (const NumericError& e) {
    return fail("numeric", e.what());
  } catch (const Error& e) {
    return fail("error", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return fail("usage", "no command given");
}
