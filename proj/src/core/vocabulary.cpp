#include "treetx/core/vocabulary.hpp"

#include <cstdio>

#include "treetx/core/errors.hpp"

namespace treetx {

SymbolTable::SymbolTable() { intern(kUnknownSymbol); }

std::int32_t SymbolTable::intern(std::string_view symbol) {
  auto it = index_.find(std::string(symbol));
  if (it != index_.end()) return it->second;
  auto id = static_cast<std::int32_t>(symbols_.size());
  symbols_.emplace_back(symbol);
  index_.emplace(symbols_.back(), id);
  return id;
}

std::int32_t SymbolTable::lookup(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? kUnknownId : it->second;
}

bool SymbolTable::contains(std::string_view symbol) const {
  return index_.count(std::string(symbol)) != 0;
}

const std::string& SymbolTable::symbol(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw Error("symbol id " + std::to_string(id) + " outside vocabulary of size " +
                std::to_string(symbols_.size()));
  }
  return symbols_[static_cast<std::size_t>(id)];
}

std::int32_t Vocabulary::type_id(std::string_view s, VocabMode mode) {
  return mode == VocabMode::kGrow ? types.intern(s) : types.lookup(s);
}

std::int32_t Vocabulary::token_id(std::string_view s, VocabMode mode) {
  return mode == VocabMode::kGrow ? tokens.intern(s) : tokens.lookup(s);
}

std::uint64_t Vocabulary::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& s : types.symbols()) feed(s);
  feed("\x01tokens");
  for (const auto& s : tokens.symbols()) feed(s);
  return h;
}

std::string hex_digest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace treetx
