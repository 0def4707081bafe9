#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "treetx/core/syntax_tree.hpp"
#include "treetx/core/vocabulary.hpp"
#include "treetx/model/config.hpp"

namespace treetx::training {

/// Ground truth of a corrupted-operator sample.
struct OperatorFault {
  NodeId target = 0;
  int original_op = 0;  // repair label
  int corrupted_op = 0;
  std::uint64_t source_hash = 0;
};

/// A task corpus as stored on disk. For the wrongop task `trees` holds the
/// corrupted trees and `faults[i]` describes tree i.
struct Corpus {
  model::HeadKind task = model::HeadKind::kClassify;
  std::vector<SyntaxTree> trees;
  std::vector<OperatorFault> faults;
  std::vector<std::string> sources;  // pristine program text, when known
  std::vector<std::vector<NodeId>> candidates;  // pointer candidates (wrongop only)
  Vocabulary vocab;
  std::size_t classes = 0;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t size() const { return trees.size(); }
  /// Checks labels against `classes` and the fault records against the trees.
  void check() const;
};

Corpus make_classify_corpus(int classes, int per_class, std::uint64_t seed, bool node_labels = false);
Corpus make_wrongop_corpus(int programs, int min_ops, std::uint64_t seed, double mean_ops = 6.0);

/// Directory layout: trees.jsonl, meta.json, sources.jsonl and, for the
/// wrongop task, mutations.jsonl. Byte-identical for equal corpora.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

/// Random trees with random labels over a synthetic vocabulary. Wrongop
/// samples mark 2 to 4 leaves as pointer candidates (fewer if the tree has
/// fewer leaves); node samples label a random nonempty subset of nodes.
struct SyntheticOptions {
  model::HeadKind task = model::HeadKind::kClassify;
  std::size_t trees = 10;
  std::size_t min_nodes = 5;
  std::size_t max_nodes = 20;
  std::size_t max_children = 4;
  std::size_t classes = 3;
  std::size_t type_vocab = 8;
  std::size_t token_vocab = 16;
  std::uint64_t seed = 1;
};

Corpus synthetic_corpus(const SyntheticOptions& options);

/// Operator leaves of `tree` under `vocab`, in id order.
std::vector<NodeId> pointer_candidates(const SyntaxTree& tree, const Vocabulary& vocab);

/// Mean over samples of 1 / |candidates|.
double random_pointer_baseline(const Corpus& corpus);

}  // namespace treetx::training
