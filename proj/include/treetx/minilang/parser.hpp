#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "treetx/core/errors.hpp"
#include "treetx/core/syntax_tree.hpp"
#include "treetx/core/vocabulary.hpp"

namespace treetx::minilang {

/// Parse failure at token index `position()` with the set of tokens that
/// would have been accepted there.
class SyntaxError : public ParseError {
 public:
  SyntaxError(const std::string& what, std::size_t token_index, std::vector<std::string> expected)
      : ParseError(what, 0, token_index), expected_(std::move(expected)) {}

  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::vector<std::string> expected_;
};

// Grammar (';' after a simple statement is optional; generated programs always emit it):
//   program := stmt*
//   stmt    := ident '=' expr [';'] | 'if' '(' expr ')' stmt ['else' stmt]
//            | 'while' '(' expr ')' stmt | 'return' expr [';'] | expr [';']
//            | '{' stmt* '}'
//   expr    := or;  or := and ('or' and)*;  and := eq ('and' eq)*
//   eq      := rel (('=='|'!=') rel)*;  rel := add (('<'|'>'|'<='|'>=') add)*
//   add     := mul (('+'|'-') mul)*;  mul := unary (('*'|'/'|'%') unary)*
//   unary   := '-' unary | int | ident | '(' expr ')'

/// Parses into a pre-order numbered tree using `vocab`. In frozen mode unknown
/// identifiers map to the UNKNOWN token.
SyntaxTree parse(std::string_view source, Vocabulary& vocab, VocabMode mode);

/// Parses against the closed default vocabulary.
SyntaxTree parse(std::string_view source);

}  // namespace treetx::minilang
