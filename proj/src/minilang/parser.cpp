#include "treetx/minilang/parser.hpp"

#include <memory>
#include <optional>

#include "treetx/minilang/grammar.hpp"
#include "treetx/minilang/lexer.hpp"

namespace treetx::minilang {

namespace {

struct ParseNode {
  std::string_view type;
  std::optional<std::string> token;
  std::vector<ParseNode> children;
};

ParseNode leaf(std::string_view type, std::string token) {
  return ParseNode{type, std::move(token), {}};
}

std::string describe(const Token& t) {
  return t.kind == TokenKind::kEnd ? "end of input" : "'" + t.text + "'";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  ParseNode program() {
    ParseNode root{sym::kProgram, std::nullopt, {}};
    while (peek().kind != TokenKind::kEnd) root.children.push_back(statement());
    return root;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }

  bool at(TokenKind kind, std::string_view text) const {
    return peek().kind == kind && peek().text == text;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string list;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      list += (i ? ", " : "") + expected[i];
    }
    throw SyntaxError("parse error at token " + std::to_string(pos_) + " (offset " +
                          std::to_string(peek().offset) + "): expected " + list + " but found " +
                          describe(peek()),
                      pos_, std::move(expected));
  }

  ParseNode expect(TokenKind kind, std::string_view text, std::string_view type) {
    if (!at(kind, text)) fail({"'" + std::string(text) + "'"});
    return leaf(type, tokens_[pos_++].text);
  }

  void optional_semicolon(ParseNode& stmt) {
    if (at(TokenKind::kPunct, ";")) stmt.children.push_back(leaf(sym::kPunct, tokens_[pos_++].text));
  }

  ParseNode statement() {
    const Token& t = peek();
    if (t.kind == TokenKind::kPunct && t.text == "{") {
      ParseNode block{sym::kBlock, std::nullopt, {}};
      block.children.push_back(leaf(sym::kPunct, tokens_[pos_++].text));
      while (!at(TokenKind::kPunct, "}")) {
        if (peek().kind == TokenKind::kEnd) fail({"'}'", "statement"});
        block.children.push_back(statement());
      }
      block.children.push_back(leaf(sym::kPunct, tokens_[pos_++].text));
      return block;
    }
    if (t.kind == TokenKind::kKeyword && (t.text == "if" || t.text == "while")) {
      ParseNode node{t.text == "if" ? sym::kIf : sym::kWhile, std::nullopt, {}};
      const bool is_if = t.text == "if";
      node.children.push_back(leaf(sym::kKeyword, tokens_[pos_++].text));
      node.children.push_back(expect(TokenKind::kPunct, "(", sym::kPunct));
      node.children.push_back(expression());
      node.children.push_back(expect(TokenKind::kPunct, ")", sym::kPunct));
      node.children.push_back(statement());
      if (is_if && at(TokenKind::kKeyword, "else")) {
        node.children.push_back(leaf(sym::kKeyword, tokens_[pos_++].text));
        node.children.push_back(statement());
      }
      return node;
    }
    if (t.kind == TokenKind::kKeyword && t.text == "return") {
      ParseNode node{sym::kReturn, std::nullopt, {}};
      node.children.push_back(leaf(sym::kKeyword, tokens_[pos_++].text));
      node.children.push_back(expression());
      optional_semicolon(node);
      return node;
    }
    if (t.kind == TokenKind::kIdent && peek(1).kind == TokenKind::kPunct && peek(1).text == "=") {
      ParseNode node{sym::kAssign, std::nullopt, {}};
      node.children.push_back(leaf(sym::kIdent, tokens_[pos_++].text));
      node.children.push_back(leaf(sym::kPunct, tokens_[pos_++].text));
      node.children.push_back(expression());
      optional_semicolon(node);
      return node;
    }
    if (t.kind == TokenKind::kKeyword && t.text == "else") fail({"statement"});
    ParseNode node{sym::kExprStmt, std::nullopt, {}};
    node.children.push_back(expression());
    optional_semicolon(node);
    return node;
  }

  ParseNode expression() { return binary(0); }

  // Precedence levels, loosest first.
  static constexpr std::array<std::array<std::string_view, 4>, 6> kLevels = {{
      {"or", "", "", ""},
      {"and", "", "", ""},
      {"==", "!=", "", ""},
      {"<", ">", "<=", ">="},
      {"+", "-", "", ""},
      {"*", "/", "%", ""},
  }};

  bool level_has(std::size_t level, const Token& t) const {
    if (t.kind != TokenKind::kOperator) return false;
    for (auto op : kLevels[level]) {
      if (!op.empty() && op == t.text) return true;
    }
    return false;
  }

  ParseNode binary(std::size_t level) {
    if (level == kLevels.size()) return unary();
    ParseNode lhs = binary(level + 1);
    while (level_has(level, peek())) {
      ParseNode op = leaf(sym::kBinopOperator, tokens_[pos_++].text);
      ParseNode rhs = binary(level + 1);
      ParseNode node{sym::kBinop, std::nullopt, {}};
      node.children.push_back(std::move(lhs));
      node.children.push_back(std::move(op));
      node.children.push_back(std::move(rhs));
      lhs = std::move(node);
    }
    return lhs;
  }

  ParseNode unary() {
    const Token& t = peek();
    if (t.kind == TokenKind::kOperator && t.text == "-") {
      ParseNode node{sym::kUnary, std::nullopt, {}};
      node.children.push_back(leaf(sym::kUnaryOperator, tokens_[pos_++].text));
      node.children.push_back(unary());
      return node;
    }
    if (t.kind == TokenKind::kInt) return leaf(sym::kInt, int_bucket(tokens_[pos_++].text));
    if (t.kind == TokenKind::kIdent) return leaf(sym::kIdent, tokens_[pos_++].text);
    if (t.kind == TokenKind::kPunct && t.text == "(") {
      ParseNode node{sym::kParen, std::nullopt, {}};
      node.children.push_back(leaf(sym::kPunct, tokens_[pos_++].text));
      node.children.push_back(expression());
      node.children.push_back(expect(TokenKind::kPunct, ")", sym::kPunct));
      return node;
    }
    fail({"integer", "identifier", "'('", "'-'"});
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

void flatten(const ParseNode& src, SyntaxTree& tree, Vocabulary& vocab, VocabMode mode) {
  // Iterative pre-order so deeply nested sources cannot blow the stack here.
  struct Frame {
    const ParseNode* node;
    std::optional<NodeId> parent;
  };
  std::vector<Frame> stack{{&src, std::nullopt}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    SyntaxNode node;
    node.id = static_cast<NodeId>(tree.nodes.size());
    node.type_id = vocab.type_id(f.node->type, mode);
    if (f.node->token) node.token_id = vocab.token_id(*f.node->token, mode);
    if (f.parent) tree.nodes[*f.parent].children.push_back(node.id);
    tree.nodes.push_back(std::move(node));
    const NodeId self = tree.nodes.back().id;
    for (auto it = f.node->children.rbegin(); it != f.node->children.rend(); ++it) {
      stack.push_back({&*it, self});
    }
  }
}

}  // namespace

SyntaxTree parse(std::string_view source, Vocabulary& vocab, VocabMode mode) {
  Parser parser(tokenize(source));
  ParseNode root = parser.program();
  SyntaxTree tree;
  flatten(root, tree, vocab, mode);
  tree.root = 0;
  return tree;
}

SyntaxTree parse(std::string_view source) {
  Vocabulary vocab = default_vocabulary();
  return parse(source, vocab, VocabMode::kFrozen);
}

}  // namespace treetx::minilang
