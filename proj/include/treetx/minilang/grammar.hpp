#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "treetx/core/vocabulary.hpp"

namespace treetx::minilang {

// Node type symbols. Operators, keywords and punctuation are explicit leaves.
namespace sym {
inline constexpr std::string_view kProgram = "program";
inline constexpr std::string_view kBlock = "block";
inline constexpr std::string_view kAssign = "assign";
inline constexpr std::string_view kIf = "if";
inline constexpr std::string_view kWhile = "while";
inline constexpr std::string_view kReturn = "return";
inline constexpr std::string_view kExprStmt = "expr_stmt";
inline constexpr std::string_view kBinop = "binop";
inline constexpr std::string_view kUnary = "unary";
inline constexpr std::string_view kParen = "paren";
inline constexpr std::string_view kIdent = "ident";
inline constexpr std::string_view kInt = "int";
inline constexpr std::string_view kKeyword = "keyword";
inline constexpr std::string_view kPunct = "punct";
inline constexpr std::string_view kBinopOperator = "binop-operator";
inline constexpr std::string_view kUnaryOperator = "unary-operator";
}  // namespace sym

inline constexpr std::array<std::string_view, 16> kNodeTypes = {
    sym::kProgram, sym::kBlock,  sym::kAssign, sym::kIf,      sym::kWhile,
    sym::kReturn,  sym::kExprStmt, sym::kBinop, sym::kUnary,  sym::kParen,
    sym::kIdent,   sym::kInt,    sym::kKeyword, sym::kPunct,  sym::kBinopOperator,
    sym::kUnaryOperator};

/// The binary operator set; the position in this array is the repair class.
inline constexpr std::array<std::string_view, 13> kOperators = {
    "+", "-", "*", "/", "%", "<", ">", "<=", ">=", "==", "!=", "and", "or"};

inline constexpr std::array<std::string_view, 4> kKeywords = {"if", "else", "while", "return"};
inline constexpr std::array<std::string_view, 6> kPunctuation = {"(", ")", "{", "}", ";", "="};

/// Generic identifier pool shared by the generators.
inline constexpr std::array<std::string_view, 20> kIdentifierPool = {
    "a", "b", "c", "d", "f", "g", "h", "i", "j", "k",
    "m", "n", "p", "q", "r", "s", "t", "u", "v", "w"};

std::optional<std::size_t> operator_index(std::string_view op);

/// Integer literals are bucketed: 0, 1, 2-9, 10-99, >=100.
std::string int_bucket(std::string_view digits);

/// The closed vocabulary every parsed or generated tree uses.
const Vocabulary& default_vocabulary();

/// Bumped whenever generator output changes for a fixed seed.
inline constexpr int kGeneratorVersion = 1;

}  // namespace treetx::minilang
