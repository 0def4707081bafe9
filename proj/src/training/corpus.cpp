#include "treetx/training/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "treetx/core/random.hpp"
#include "treetx/core/random_tree.hpp"
#include "treetx/core/tree_io.hpp"
#include "treetx/minilang/generators.hpp"
#include "treetx/minilang/grammar.hpp"
#include "treetx/minilang/mutation.hpp"

namespace treetx::training {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

nlohmann::json symbols_json(const SymbolTable& table) { return table.symbols(); }

SymbolTable symbols_from_json(const nlohmann::json& j) {
  SymbolTable table;
  const auto symbols = j.get<std::vector<std::string>>();
  if (symbols.empty() || symbols.front() != kUnknownSymbol) {
    throw Error("vocabulary list must start with " + std::string(kUnknownSymbol));
  }
  for (std::size_t i = 1; i < symbols.size(); ++i) table.intern(symbols[i]);
  return table;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::string hash_hex(std::uint64_t h) { return hex_digest(h); }

std::uint64_t parse_hex(const std::string& s) { return std::stoull(s, nullptr, 16); }

}  // namespace

std::vector<NodeId> pointer_candidates(const SyntaxTree& tree, const Vocabulary& vocab) {
  return minilang::operator_nodes(tree, vocab);
}

void Corpus::check() const {
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const SyntaxTree& t = trees[i];
    switch (task) {
      case model::HeadKind::kClassify:
        if (!t.label || *t.label < 0 || static_cast<std::size_t>(*t.label) >= classes) {
          throw Error("tree " + std::to_string(i) + ": missing or out-of-range label");
        }
        break;
      case model::HeadKind::kNodeClassify:
        if (t.node_labels.empty()) throw Error("tree " + std::to_string(i) + " has no node labels");
        for (const auto& [id, label] : t.node_labels) {
          if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw Error("tree " + std::to_string(i) + ": node label out of range");
          }
        }
        break;
      case model::HeadKind::kWrongOp: {
        const OperatorFault& f = faults.at(i);
        const auto& cands = candidates.at(i);
        if (std::find(cands.begin(), cands.end(), f.target) == cands.end()) {
          throw Error("tree " + std::to_string(i) + ": target node is not an operator leaf");
        }
        if (f.original_op < 0 || static_cast<std::size_t>(f.original_op) >= classes ||
            f.corrupted_op == f.original_op) {
          throw Error("tree " + std::to_string(i) + ": bad operator labels");
        }
        break;
      }
    }
  }
}

Corpus make_classify_corpus(int classes, int per_class, std::uint64_t seed, bool node_labels) {
  const auto programs = minilang::gen_classify_corpus(classes, per_class, seed);
  Corpus c;
  c.task = node_labels ? model::HeadKind::kNodeClassify : model::HeadKind::kClassify;
  c.vocab = minilang::default_vocabulary();
  c.classes = node_labels ? minilang::kIdentifierRoleClasses : static_cast<std::size_t>(classes);
  for (const auto& p : programs) {
    c.trees.push_back(node_labels ? minilang::label_identifier_roles(p.tree, c.vocab) : p.tree);
    c.sources.push_back(p.source);
  }
  c.meta = {{"task", std::string(model::to_string(c.task))},
            {"seed", seed},
            {"generator_version", minilang::kGeneratorVersion},
            {"classes", c.classes},
            {"template_classes", classes},
            {"per_class", per_class}};
  if (node_labels) c.meta["node_classes"] = {"assign-target", "value-read", "condition-read"};
  return c;
}

Corpus make_wrongop_corpus(int programs, int min_ops, std::uint64_t seed, double mean_ops) {
  const auto samples = minilang::gen_wrongop_corpus(programs, min_ops, seed, mean_ops);
  Corpus c;
  c.task = model::HeadKind::kWrongOp;
  c.vocab = minilang::default_vocabulary();
  c.classes = minilang::kOperators.size();
  for (const auto& s : samples) {
    c.trees.push_back(s.record.tree);
    c.faults.push_back({s.record.target_node, s.record.original_op, s.record.corrupted_op,
                        s.record.source_hash});
    c.sources.push_back(s.source);
    c.candidates.push_back(pointer_candidates(s.record.tree, c.vocab));
  }
  std::vector<std::string> ops(minilang::kOperators.begin(), minilang::kOperators.end());
  c.meta = {{"task", "wrongop"},
            {"seed", seed},
            {"generator_version", minilang::kGeneratorVersion},
            {"classes", c.classes},
            {"programs", programs},
            {"min_ops", min_ops},
            {"mean_ops", mean_ops},
            {"operators", ops}};
  return c;
}

Corpus synthetic_corpus(const SyntheticOptions& o) {
  if (o.min_nodes < 1 || o.max_nodes < o.min_nodes) throw Error("synthetic corpus: bad node range");
  if (o.classes < 2) throw Error("synthetic corpus: need at least 2 classes");
  Corpus c;
  c.task = o.task;
  c.classes = o.classes;
  for (std::size_t i = 1; i < std::max<std::size_t>(o.type_vocab, 2); ++i) {
    c.vocab.types.intern("t" + std::to_string(i));
  }
  for (std::size_t i = 1; i < std::max<std::size_t>(o.token_vocab, 2); ++i) {
    c.vocab.tokens.intern("k" + std::to_string(i));
  }
  Rng rng(o.seed);
  RandomTreeOptions shape;
  shape.max_children = o.max_children;
  shape.type_vocab = c.vocab.types.size();
  shape.token_vocab = c.vocab.tokens.size();
  for (std::size_t t = 0; t < o.trees; ++t) {
    shape.nodes = static_cast<std::size_t>(
        rng.range(static_cast<std::int64_t>(o.min_nodes), static_cast<std::int64_t>(o.max_nodes)));
    SyntaxTree tree = random_tree(rng, shape);
    switch (o.task) {
      case model::HeadKind::kClassify:
        tree.label = static_cast<std::int32_t>(rng.index(o.classes));
        break;
      case model::HeadKind::kNodeClassify:
        for (const auto& n : tree.nodes) {
          if (rng.chance(0.5)) tree.node_labels[n.id] = static_cast<std::int32_t>(rng.index(o.classes));
        }
        if (tree.node_labels.empty()) tree.node_labels[0] = static_cast<std::int32_t>(rng.index(o.classes));
        break;
      case model::HeadKind::kWrongOp: {
        std::vector<NodeId> leaves;
        for (const auto& n : tree.nodes) {
          if (n.is_leaf()) leaves.push_back(n.id);
        }
        rng.shuffle(leaves);
        leaves.resize(std::min<std::size_t>(leaves.size(), 2 + rng.index(3)));
        std::sort(leaves.begin(), leaves.end());
        OperatorFault f;
        f.target = leaves[rng.index(leaves.size())];
        f.original_op = static_cast<int>(rng.index(o.classes));
        f.corrupted_op = static_cast<int>((f.original_op + 1 + rng.index(o.classes - 1)) % o.classes);
        f.source_hash = structural_hash(tree);
        c.faults.push_back(f);
        c.candidates.push_back(std::move(leaves));
        break;
      }
    }
    c.trees.push_back(std::move(tree));
  }
  c.meta = {{"task", std::string(model::to_string(o.task))}, {"seed", o.seed}, {"synthetic", true}};
  return c;
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  save_trees(corpus.trees, corpus.vocab, dir / "trees.jsonl");

  nlohmann::json meta = corpus.meta;
  meta["task"] = std::string(model::to_string(corpus.task));
  meta["classes"] = corpus.classes;
  meta["count"] = corpus.trees.size();
  meta["vocabulary"] = {{"types", symbols_json(corpus.vocab.types)},
                        {"tokens", symbols_json(corpus.vocab.tokens)}};
  meta["vocabulary_digest"] = hex_digest(corpus.vocab.digest());
  write_text(dir / "meta.json", meta.dump(2) + "\n");

  std::ostringstream sources;
  for (const auto& s : corpus.sources) sources << ordered_json{{"source", s}}.dump() << '\n';
  write_text(dir / "sources.jsonl", sources.str());

  if (corpus.task == model::HeadKind::kWrongOp) {
    std::ostringstream out;
    for (const auto& f : corpus.faults) {
      ordered_json j;
      j["target"] = f.target;
      j["original_op"] = f.original_op;
      j["corrupted_op"] = f.corrupted_op;
      j["source_hash"] = hash_hex(f.source_hash);
      out << j.dump() << '\n';
    }
    write_text(dir / "mutations.jsonl", out.str());
  }
}

Corpus load_corpus(const fs::path& dir) {
  Corpus c;
  nlohmann::json meta;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) throw Error("cannot read " + (dir / "meta.json").string());
    try {
      meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error("meta.json: " + std::string(e.what()));
    }
  }
  c.task = model::parse_head_kind(meta.at("task").get<std::string>());
  c.classes = meta.at("classes");
  c.vocab.types = symbols_from_json(meta.at("vocabulary").at("types"));
  c.vocab.tokens = symbols_from_json(meta.at("vocabulary").at("tokens"));
  if (meta.at("vocabulary_digest").get<std::string>() != hex_digest(c.vocab.digest())) {
    throw Error("meta.json: vocabulary digest does not match the listed symbols");
  }
  c.trees = load_trees(dir / "trees.jsonl", c.vocab, VocabMode::kFrozen);
  if (fs::exists(dir / "sources.jsonl")) {
    for (const auto& line : read_lines(dir / "sources.jsonl")) {
      c.sources.push_back(nlohmann::json::parse(line).at("source").get<std::string>());
    }
  }
  if (c.task == model::HeadKind::kWrongOp) {
    const auto lines = read_lines(dir / "mutations.jsonl");
    if (lines.size() != c.trees.size()) {
      throw Error("mutations.jsonl has " + std::to_string(lines.size()) + " records for " +
                  std::to_string(c.trees.size()) + " trees");
    }
    for (const auto& line : lines) {
      const auto j = nlohmann::json::parse(line);
      c.faults.push_back({j.at("target").get<NodeId>(), j.at("original_op").get<int>(),
                          j.at("corrupted_op").get<int>(),
                          parse_hex(j.at("source_hash").get<std::string>())});
    }
    for (const auto& t : c.trees) c.candidates.push_back(pointer_candidates(t, c.vocab));
  }
  meta.erase("vocabulary");
  c.meta = std::move(meta);
  c.check();
  return c;
}

double random_pointer_baseline(const Corpus& corpus) {
  if (corpus.candidates.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : corpus.candidates) total += 1.0 / static_cast<double>(c.size());
  return total / static_cast<double>(corpus.candidates.size());
}

}  // namespace treetx::training
