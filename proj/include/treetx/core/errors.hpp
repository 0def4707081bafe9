#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace treetx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValidationKind {
  kCycleDetected,
  kOrphanNode,
  kDuplicateParent,
  kDuplicateId,
  kMissingRoot,
  kDanglingChild,
  kNonDenseId,
  kLabelOutOfTree,
};

const char* to_string(ValidationKind kind);

/// A tree violates one of the rooted-tree invariants. `node()` names the
/// offending node id.
class ValidationError : public Error {
 public:
  ValidationError(ValidationKind kind, std::int64_t node, const std::string& detail = {});

  ValidationKind kind() const { return kind_; }
  std::int64_t node() const { return node_; }

 private:
  ValidationKind kind_;
  std::int64_t node_;
};

/// Malformed input text. `line()` is 1-based for line-oriented formats and 0
/// when no line applies; `position()` is a token index or byte offset
/// depending on the producer.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t position = 0)
      : Error(what), line_(line), position_(position) {}

  std::size_t line() const { return line_; }
  std::size_t position() const { return position_; }

 private:
  std::size_t line_;
  std::size_t position_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace treetx
