#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace treetx {

inline constexpr std::int32_t kUnknownId = 0;
inline constexpr std::string_view kUnknownSymbol = "<unk>";

/// Dense bijection between strings and [0, size). Id 0 is the reserved
/// UNKNOWN entry that absorbs every out-of-vocabulary lookup.
class SymbolTable {
 public:
  SymbolTable();

  std::int32_t intern(std::string_view symbol);
  std::int32_t lookup(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  const std::string& symbol(std::int32_t id) const;
  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  bool operator==(const SymbolTable& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::int32_t> index_;
};

enum class VocabMode { kGrow, kFrozen };

struct Vocabulary {
  SymbolTable types;
  SymbolTable tokens;

  std::int32_t type_id(std::string_view s, VocabMode mode);
  std::int32_t token_id(std::string_view s, VocabMode mode);

  /// FNV-1a over both symbol lists; equal digests mean interchangeable ids.
  std::uint64_t digest() const;

  bool operator==(const Vocabulary&) const = default;
};

std::string hex_digest(std::uint64_t value);

}  // namespace treetx
