#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "treetx/core/syntax_tree.hpp"
#include "treetx/core/vocabulary.hpp"

namespace treetx {

// Tree JSON-lines format, one tree per line:
//   {"root":0,"label":<int|null>,"nodes":[{"id":0,"type":"..","token":<str|null>,
//    "children":[..]},..],"node_labels":{"<id>":<int>,..}}
// Keys are emitted in exactly that order, nodes sorted by id, no whitespace.
// "node_labels" is omitted when the tree has none.

std::string tree_to_json_line(const SyntaxTree& tree, const Vocabulary& vocab);

/// Parses and validates one line. `line_number` only feeds error messages.
SyntaxTree tree_from_json_line(std::string_view line, Vocabulary& vocab, VocabMode mode,
                               std::size_t line_number = 1);

std::vector<SyntaxTree> read_trees(std::istream& in, Vocabulary& vocab, VocabMode mode);
void write_trees(std::ostream& out, const std::vector<SyntaxTree>& trees, const Vocabulary& vocab);

std::vector<SyntaxTree> load_trees(const std::filesystem::path& path, Vocabulary& vocab,
                                   VocabMode mode);
void save_trees(const std::vector<SyntaxTree>& trees, const Vocabulary& vocab,
                const std::filesystem::path& path);

}  // namespace treetx
