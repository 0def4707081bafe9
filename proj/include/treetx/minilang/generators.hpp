#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <string>
#include <vector>

#include "treetx/core/syntax_tree.hpp"
#include "treetx/core/vocabulary.hpp"
#include "treetx/minilang/mutation.hpp"

namespace treetx::minilang {

inline constexpr int kTemplateCount = 8;

/// Template family names, indexed by class label.
extern const std::array<std::string_view, kTemplateCount> kTemplateNames;

struct GeneratedProgram {
  std::string source;
  SyntaxTree tree;
};

/// `per_class` programs for each of the first `classes` template families.
/// Sample `k` has label `k % classes`. Pure function of the arguments.
std::vector<GeneratedProgram> gen_classify_corpus(int classes, int per_class, std::uint64_t seed);

/// One program of template family `family` drawn from stream `rng`.
std::string generate_template_program(int family, Rng& rng);

struct WrongOpSample {
  std::string source;  // pristine program
  MutationRecord record;
};

/// Random programs with at least `min_ops` binary operators (mean about
/// `mean_ops`), each corrupted by mutate_operator.
std::vector<WrongOpSample> gen_wrongop_corpus(int programs, int min_ops, std::uint64_t seed,
                                              double mean_ops = 6.0);

/// A random well-formed program containing exactly `operators` binary operators.
std::string generate_operator_program(int operators, Rng& rng);

/// Identifier role labels: 0 = assignment target, 1 = read in a value
/// expression, 2 = read inside an if/while condition. Returns the tree with
/// node_labels filled for every identifier leaf.
SyntaxTree label_identifier_roles(const SyntaxTree& tree, const Vocabulary& vocab);

inline constexpr int kIdentifierRoleClasses = 3;

}  // namespace treetx::minilang
