#include "treetx/minilang/lexer.hpp"

#include <algorithm>
#include <cctype>

#include "treetx/minilang/grammar.hpp"

namespace treetx::minilang {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<Token> tokenize(std::string_view source) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = source.size();
  while (i < n) {
    char c = source[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && source[i + 1] == '/') {
      while (i < n && source[i] != '\n') ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_ident_char(source[i])) ++i;
      std::string word(source.substr(start, i - start));
      TokenKind kind = TokenKind::kIdent;
      if (word == "and" || word == "or") {
        kind = TokenKind::kOperator;
      } else if (std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end()) {
        kind = TokenKind::kKeyword;
      }
      tokens.push_back({kind, std::move(word), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(source[i]))) ++i;
      tokens.push_back({TokenKind::kInt, std::string(source.substr(start, i - start)), start});
      continue;
    }
    if (i + 1 < n) {
      std::string_view two = source.substr(i, 2);
      if (two == "<=" || two == ">=" || two == "==" || two == "!=") {
        tokens.push_back({TokenKind::kOperator, std::string(two), start});
        i += 2;
        continue;
      }
    }
    switch (c) {
      case '+': case '-': case '*': case '/': case '%': case '<': case '>':
        tokens.push_back({TokenKind::kOperator, std::string(1, c), start});
        break;
      case '(': case ')': case '{': case '}': case ';': case '=':
        tokens.push_back({TokenKind::kPunct, std::string(1, c), start});
        break;
      default:
        throw LexError("unexpected character '" + std::string(1, c) + "' at offset " +
                           std::to_string(start),
                       start);
    }
    ++i;
  }
  tokens.push_back({TokenKind::kEnd, "", n});
  return tokens;
}

}  // namespace treetx::minilang
