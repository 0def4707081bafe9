#include <gtest/gtest.h>

#include <map>
#include <set>

#include "treetx/core/errors.hpp"
#include "treetx/minilang/generators.hpp"
#include "treetx/minilang/grammar.hpp"
#include "treetx/minilang/lexer.hpp"
#include "treetx/minilang/mutation.hpp"
#include "treetx/minilang/parser.hpp"

namespace treetx::minilang {
namespace {

// S-expression view: type[token](children...), punctuation included.
std::string render(const SyntaxTree& t, NodeId id, const Vocabulary& v) {
  const SyntaxNode& n = t.node(id);
  std::string out = v.types.symbol(n.type_id);
  if (n.token_id) out += "[" + v.tokens.symbol(*n.token_id) + "]";
  if (!n.children.empty()) {
    out += "(";
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (i) out += " ";
      out += render(t, n.children[i], v);
    }
    out += ")";
  }
  return out;
}

std::string render(const SyntaxTree& t) { return render(t, t.root, default_vocabulary()); }

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens)
    if (t.kind != TokenKind::kEnd) out.push_back(t.text);
  return out;
}

TEST(Tokenize, Assignment) {
  const auto toks = tokenize("a = 1");
  ASSERT_EQ(toks.size(), 4u);
  EXPECT_EQ(toks[0].kind, TokenKind::kIdent);
  EXPECT_EQ(toks[0].text, "a");
  EXPECT_EQ(toks[1].kind, TokenKind::kPunct);
  EXPECT_EQ(toks[1].text, "=");
  EXPECT_EQ(toks[2].kind, TokenKind::kInt);
  EXPECT_EQ(toks[2].text, "1");
  EXPECT_EQ(toks[3].kind, TokenKind::kEnd);
}

TEST(Tokenize, LongestMatch) {
  EXPECT_EQ(texts(tokenize("<= <")), (std::vector<std::string>{"<=", "<"}));
  EXPECT_EQ(texts(tokenize("a==b!=c")), (std::vector<std::string>{"a", "==", "b", "!=", "c"}));
  EXPECT_EQ(texts(tokenize("x = y // note\nand z")),
            (std::vector<std::string>{"x", "=", "y", "and", "z"}));
  const auto kw = tokenize("android and");
  EXPECT_EQ(kw[0].kind, TokenKind::kIdent);
  EXPECT_EQ(kw[1].kind, TokenKind::kOperator);
}

TEST(Tokenize, UnknownCharacter) {
  try {
    tokenize("a $ b");
    FAIL();
  } catch (const LexError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }
}

TEST(Parse, AssignmentShape) {
  EXPECT_EQ(render(parse("a = b + c")),
            "program(assign(ident[a] punct[=] binop(ident[b] binop-operator[+] ident[c])))");
}

TEST(Parse, Precedence) {
  EXPECT_EQ(render(parse("a = b + c * d")),
            "program(assign(ident[a] punct[=] binop(ident[b] binop-operator[+] "
            "binop(ident[c] binop-operator[*] ident[d]))))");
  EXPECT_EQ(render(parse("w = a or b and c == d < h - f % g")),
            "program(assign(ident[w] punct[=] binop(ident[a] binop-operator[or] "
            "binop(ident[b] binop-operator[and] binop(ident[c] binop-operator[==] "
            "binop(ident[d] binop-operator[<] binop(ident[h] binop-operator[-] "
            "binop(ident[f] binop-operator[%] ident[g]))))))))");
}

TEST(Parse, LeftAssociative) {
  EXPECT_EQ(render(parse("a - b - c;")),
            "program(expr_stmt(binop(binop(ident[a] binop-operator[-] ident[b]) "
            "binop-operator[-] ident[c]) punct[;]))");
}

TEST(Parse, StatementsAndBuckets) {
  EXPECT_EQ(render(parse("if (a) { return -7; } else b = 100")),
            "program(if(keyword[if] punct[(] ident[a] punct[)] block(punct[{] "
            "return(keyword[return] unary(unary-operator[-] int[int:2-9]) punct[;]) punct[}]) "
            "keyword[else] assign(ident[b] punct[=] int[int:100+])))");
  EXPECT_EQ(render(parse("while (i < 10) i = i + 1;")),
            "program(while(keyword[while] punct[(] binop(ident[i] binop-operator[<] int[int:10-99]) "
            "punct[)] assign(ident[i] punct[=] binop(ident[i] binop-operator[+] int[int:1]) punct[;])))");
}

TEST(Parse, MissingParenthesis) {
  try {
    parse("a = (b + c");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.position(), 6u);
    EXPECT_NE(std::find(e.expected().begin(), e.expected().end(), "')'"), e.expected().end());
  }
}

TEST(Parse, OtherErrors) {
  EXPECT_THROW(parse("a = ;"), SyntaxError);
  EXPECT_THROW(parse("{ a = 1"), SyntaxError);
  EXPECT_THROW(parse("else a = 1"), SyntaxError);
  EXPECT_THROW(parse("a = 1 +"), ParseError);
}

TEST(Parse, ValidPreorderTree) {
  const SyntaxTree t = parse("a = 1; while (a < 5) { a = a * 2; if (a == 4) return a; }");
  EXPECT_NO_THROW(validate(t));
  const auto order = preorder(t);
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
}

TEST(ClassifyCorpus, Cardinality) {
  const auto c = gen_classify_corpus(2, 1, 3);
  ASSERT_EQ(c.size(), 2u);
  std::set<std::int32_t> labels;
  for (const auto& p : c) labels.insert(*p.tree.label);
  EXPECT_EQ(labels, (std::set<std::int32_t>{0, 1}));
}

TEST(ClassifyCorpus, Deterministic) {
  const auto a = gen_classify_corpus(8, 20, 42);
  const auto b = gen_classify_corpus(8, 20, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source, b[i].source);
    EXPECT_EQ(a[i].tree, b[i].tree);
  }
  const auto c = gen_classify_corpus(8, 20, 43);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i].source == c[i].source;
  EXPECT_LT(same, a.size() / 4);
}

TEST(ClassifyCorpus, ExactLabelCountsAndParseBack) {
  const auto c = gen_classify_corpus(8, 500, 7);
  std::map<std::int32_t, int> counts;
  for (const auto& p : c) {
    ++counts[*p.tree.label];
    SyntaxTree back = parse(p.source);
    back.label = p.tree.label;
    ASSERT_EQ(back, p.tree) << p.source;
  }
  ASSERT_EQ(counts.size(), 8u);
  for (const auto& [label, n] : counts) EXPECT_EQ(n, 500) << label;
}

TEST(ClassifyCorpus, RejectsClassCount) {
  EXPECT_THROW(gen_classify_corpus(1, 5, 1), Error);
  EXPECT_THROW(gen_classify_corpus(9, 5, 1), Error);
}

TEST(Mutate, TwoOperatorTree) {
  const SyntaxTree t = parse("a = b + c * d;");
  const auto ops = operator_nodes(t, default_vocabulary());
  ASSERT_EQ(ops.size(), 2u);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = mutate_operator(t, seed);
    EXPECT_TRUE(r.target_node == ops[0] || r.target_node == ops[1]);
    EXPECT_NE(r.corrupted_op, r.original_op);
    EXPECT_EQ(r.source_hash, structural_hash(t));
    std::size_t differing = 0;
    for (NodeId i = 0; i < t.size(); ++i) {
      if (t.nodes[i] != r.tree.nodes[i]) {
        ++differing;
        EXPECT_EQ(i, r.target_node);
        EXPECT_EQ(t.nodes[i].type_id, r.tree.nodes[i].type_id);
        EXPECT_EQ(t.nodes[i].children, r.tree.nodes[i].children);
      }
    }
    EXPECT_EQ(differing, 1u);
    const auto& vocab = default_vocabulary();
    EXPECT_EQ(vocab.tokens.symbol(*r.tree.node(r.target_node).token_id), kOperators[r.corrupted_op]);
    EXPECT_EQ(vocab.tokens.symbol(*t.node(r.target_node).token_id), kOperators[r.original_op]);
  }
}

TEST(Mutate, OneOperatorRejected) {
  try {
    mutate_operator(parse("a = b + c;"), 1);
    FAIL();
  } catch (const TooFewOperators& e) {
    EXPECT_EQ(e.found(), 1u);
  }
  EXPECT_THROW(mutate_operator(parse("a = b;"), 1), TooFewOperators);
}

TEST(Mutate, UniformTargetChiSquare) {
  const SyntaxTree t = parse("a = b + c * d - e / f; g = a < b and c > d;");
  const auto ops = operator_nodes(t, default_vocabulary());
  const std::size_t k = ops.size();
  ASSERT_EQ(k, 7u);
  constexpr int kTrials = 10000;
  Rng rng(2024);
  std::map<NodeId, int> hits;
  std::map<int, int> replacement;
  for (int i = 0; i < kTrials; ++i) {
    const auto r = mutate_operator(t, default_vocabulary(), rng);
    ++hits[r.target_node];
    if (r.original_op == 0) ++replacement[r.corrupted_op];
  }
  const double expected = static_cast<double>(kTrials) / static_cast<double>(k);
  const double sigma = std::sqrt(expected * (1.0 - 1.0 / static_cast<double>(k)));
  double chi2 = 0.0;
  for (NodeId id : ops) {
    EXPECT_LT(std::abs(hits[id] - expected), 3.0 * sigma) << "node " << id;
    chi2 += (hits[id] - expected) * (hits[id] - expected) / expected;
  }
  EXPECT_EQ(hits.size(), k);
  // 6 degrees of freedom, 99.9% quantile.
  EXPECT_LT(chi2, 22.458);
  // The replacement for '+' never repeats it and covers the other 12.
  EXPECT_EQ(replacement.count(0), 0u);
  EXPECT_EQ(replacement.size(), kOperators.size() - 1);
}

TEST(WrongOpCorpus, SmallCorpus) {
  const auto c = gen_wrongop_corpus(10, 2, 5);
  ASSERT_EQ(c.size(), 10u);
  for (const auto& s : c) {
    const SyntaxTree pristine = parse(s.source);
    EXPECT_GE(operator_nodes(pristine, default_vocabulary()).size(), 2u);
    EXPECT_EQ(structural_hash(pristine), s.record.source_hash);
  }
}

TEST(WrongOpCorpus, Deterministic) {
  const auto a = gen_wrongop_corpus(50, 2, 9);
  const auto b = gen_wrongop_corpus(50, 2, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source, b[i].source);
    EXPECT_EQ(a[i].record.tree, b[i].record.tree);
    EXPECT_EQ(a[i].record.target_node, b[i].record.target_node);
    EXPECT_EQ(a[i].record.corrupted_op, b[i].record.corrupted_op);
  }
}

TEST(WrongOpCorpus, MeanOperatorCount) {
  const auto c = gen_wrongop_corpus(1000, 2, 17);
  double total = 0.0;
  for (const auto& s : c) {
    const auto n = operator_nodes(parse(s.source), default_vocabulary()).size();
    EXPECT_GE(n, 2u);
    total += static_cast<double>(n);
  }
  const double mean = total / 1000.0;
  EXPECT_GE(mean, 5.0);
  EXPECT_LE(mean, 7.0);
}

TEST(WrongOpCorpus, RevertRestoresPristine) {
  for (const auto& s : gen_wrongop_corpus(300, 3, 21)) {
    const SyntaxTree back = revert_mutation(s.record, default_vocabulary());
    EXPECT_EQ(structural_hash(back), s.record.source_hash);
    EXPECT_EQ(back, parse(s.source));
    EXPECT_GE(operator_nodes(s.record.tree, default_vocabulary()).size(), 3u);
  }
}

TEST(WrongOpCorpus, RejectsMinOps) { EXPECT_THROW(gen_wrongop_corpus(5, 1, 1), Error); }

TEST(Operators, CandidatesAreBinopOperatorLeaves) {
  const auto& v = default_vocabulary();
  const auto type = v.types.lookup(sym::kBinopOperator);
  for (const auto& s : gen_wrongop_corpus(100, 2, 33)) {
    const SyntaxTree& t = s.record.tree;
    std::vector<NodeId> expected;
    for (const auto& n : t.nodes)
      if (n.type_id == type) {
        expected.push_back(n.id);
        EXPECT_TRUE(n.is_leaf());
      }
    EXPECT_EQ(operator_nodes(t, v), expected);
  }
  // Unary minus is not a candidate.
  EXPECT_EQ(operator_nodes(parse("a = -b;"), v).size(), 0u);
}

TEST(Grammar, OperatorSetAndBuckets) {
  EXPECT_EQ(kOperators.size(), 13u);
  EXPECT_EQ(operator_index("and"), 11u);
  EXPECT_FALSE(operator_index("in").has_value());
  EXPECT_EQ(int_bucket("0"), "int:0");
  EXPECT_EQ(int_bucket("1"), "int:1");
  EXPECT_EQ(int_bucket("7"), "int:2-9");
  EXPECT_EQ(int_bucket("99"), "int:10-99");
  EXPECT_EQ(int_bucket("100"), "int:100+");
  EXPECT_EQ(int_bucket("12345"), "int:100+");
}

TEST(IdentifierRoles, LabelsEveryIdentifier) {
  const auto& v = default_vocabulary();
  const SyntaxTree t = label_identifier_roles(parse("a = b; if (c < a) d = a;"), v);
  const auto ident = v.types.lookup(sym::kIdent);
  std::vector<std::int32_t> roles;
  for (const auto& n : t.nodes)
    if (n.type_id == ident) roles.push_back(t.node_labels.at(n.id));
  EXPECT_EQ(roles, (std::vector<std::int32_t>{0, 1, 2, 2, 0, 1}));
}

}  // namespace
}  // namespace treetx::minilang
