#include "treetx/core/tree_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "treetx/core/errors.hpp"

namespace treetx {

using ordered_json = nlohmann::ordered_json;

std::string tree_to_json_line(const SyntaxTree& tree, const Vocabulary& vocab) {
  ordered_json j;
  j["root"] = tree.root;
  j["label"] = tree.label ? ordered_json(*tree.label) : ordered_json(nullptr);
  ordered_json nodes = ordered_json::array();
  for (const auto& node : tree.nodes) {
    ordered_json n;
    n["id"] = node.id;
    n["type"] = vocab.types.symbol(node.type_id);
    n["token"] = node.token_id ? ordered_json(vocab.tokens.symbol(*node.token_id))
                               : ordered_json(nullptr);
    n["children"] = node.children;
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  if (!tree.node_labels.empty()) {
    ordered_json labels = ordered_json::object();
    for (const auto& [id, label] : tree.node_labels) labels[std::to_string(id)] = label;
    j["node_labels"] = std::move(labels);
  }
  return j.dump();
}

SyntaxTree tree_from_json_line(std::string_view line, Vocabulary& vocab, VocabMode mode,
                               std::size_t line_number) {
  SyntaxTree tree;
  try {
    auto j = ordered_json::parse(line);
    tree.root = j.at("root").get<NodeId>();
    if (j.contains("label") && !j.at("label").is_null()) tree.label = j.at("label").get<std::int32_t>();
    for (const auto& n : j.at("nodes")) {
      SyntaxNode node;
      node.id = n.at("id").get<NodeId>();
      node.type_id = vocab.type_id(n.at("type").get<std::string>(), mode);
      if (n.contains("token") && !n.at("token").is_null()) {
        node.token_id = vocab.token_id(n.at("token").get<std::string>(), mode);
      }
      node.children = n.at("children").get<std::vector<NodeId>>();
      tree.nodes.push_back(std::move(node));
    }
    if (j.contains("node_labels")) {
      for (const auto& [key, value] : j.at("node_labels").items()) {
        tree.node_labels[static_cast<NodeId>(std::stoul(key))] = value.get<std::int32_t>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(line_number) + ": " + e.what(), line_number);
  } catch (const std::logic_error& e) {
    throw ParseError("line " + std::to_string(line_number) + ": bad node_labels key", line_number);
  }
  std::stable_sort(tree.nodes.begin(), tree.nodes.end(),
                   [](const SyntaxNode& a, const SyntaxNode& b) { return a.id < b.id; });
  try {
    validate(tree);
  } catch (const ValidationError& e) {
    throw ValidationError(e.kind(), e.node(), "line " + std::to_string(line_number));
  }
  return tree;
}

std::vector<SyntaxTree> read_trees(std::istream& in, Vocabulary& vocab, VocabMode mode) {
  std::vector<SyntaxTree> trees;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    trees.push_back(tree_from_json_line(line, vocab, mode, number));
  }
  return trees;
}

void write_trees(std::ostream& out, const std::vector<SyntaxTree>& trees, const Vocabulary& vocab) {
  for (const auto& tree : trees) out << tree_to_json_line(tree, vocab) << '\n';
}

std::vector<SyntaxTree> load_trees(const std::filesystem::path& path, Vocabulary& vocab,
                                   VocabMode mode) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_trees(in, vocab, mode);
}

void save_trees(const std::vector<SyntaxTree>& trees, const Vocabulary& vocab,
                const std::filesystem::path& path) {
  for (const auto& tree : trees) validate(tree);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_trees(out, trees, vocab);
}

}  // namespace treetx
