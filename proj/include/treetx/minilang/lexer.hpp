#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "treetx/core/errors.hpp"

namespace treetx::minilang {

enum class TokenKind { kIdent, kInt, kKeyword, kOperator, kPunct, kEnd };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t offset;  // byte offset into the source

  bool operator==(const Token&) const = default;
};

class LexError : public ParseError {
 public:
  LexError(const std::string& what, std::size_t offset) : ParseError(what, 0, offset) {}
  std::size_t offset() const { return position(); }
};

/// Longest-match lexer. Whitespace and `//` line comments are dropped. The
/// result always ends with a kEnd token.
std::vector<Token> tokenize(std::string_view source);

}  // namespace treetx::minilang
