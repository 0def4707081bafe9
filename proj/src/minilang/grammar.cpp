#include "treetx/minilang/grammar.hpp"

#include <algorithm>

namespace treetx::minilang {

std::optional<std::size_t> operator_index(std::string_view op) {
  auto it = std::find(kOperators.begin(), kOperators.end(), op);
  if (it == kOperators.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kOperators.begin());
}

std::string int_bucket(std::string_view digits) {
  std::size_t first = digits.find_first_not_of('0');
  if (first == std::string_view::npos) return "int:0";
  std::string_view trimmed = digits.substr(first);
  if (trimmed.size() >= 3) return "int:100+";
  if (trimmed.size() == 2) return "int:10-99";
  return trimmed == "1" ? "int:1" : "int:2-9";
}

const Vocabulary& default_vocabulary() {
  static const Vocabulary vocab = [] {
    Vocabulary v;
    for (auto s : kNodeTypes) v.types.intern(s);
    for (auto s : kOperators) v.tokens.intern(s);
    for (auto s : kKeywords) v.tokens.intern(s);
    for (auto s : kPunctuation) v.tokens.intern(s);
    for (auto s : kIdentifierPool) v.tokens.intern(s);
    for (auto s : {"int:0", "int:1", "int:2-9", "int:10-99", "int:100+"}) v.tokens.intern(s);
    return v;
  }();
  return vocab;
}

}  // namespace treetx::minilang
