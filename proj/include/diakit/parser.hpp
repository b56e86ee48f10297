#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "diakit/diagnostic.hpp"
#include "diakit/filter.hpp"
#include "diakit/model.hpp"

namespace diakit {

// Parser diagnostic codes.
namespace parse_codes {
inline constexpr const char* kUnexpectedToken = "P001";
inline constexpr const char* kUnterminatedBlock = "P002";
inline constexpr const char* kDuplicateExtends = "P003";
inline constexpr const char* kMalformedIndex = "P004";
inline constexpr const char* kMalformedPredicate = "P010";
inline constexpr const char* kUnknownOperator = "P011";
}  // namespace parse_codes

struct SourceFile {
  std::string path;
  std::string text;
};

struct SourceUnit {
  std::string path;
  std::string text;
  std::vector<Declaration> declarations;  // textual order
};

struct ParseResult {
  SpecModel model;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
};

// Parses one file. Total: recovers at declaration boundaries, never throws on
// malformed input.
SourceUnit parse_unit(const SourceFile& file, std::vector<Diagnostic>& diagnostics);

// Parses every file; namespaces are global, so the model is the concatenation
// of all units in input order.
ParseResult parse(const std::vector<SourceFile>& files);

class QueryError : public std::runtime_error {
 public:
  QueryError(std::string code, std::size_t column, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)), column_(column) {}

  const std::string& code() const { return code_; }
  std::size_t column() const { return column_; }  // 1-based

 private:
  std::string code_;
  std::size_t column_;
};

// Parses the textual filter form `attr(pred),attr(pred)` where
//   pred := eq(v) | ne(v) | lt(v) | le(v) | gt(v) | ge(v)
//         | or(pred,pred) | and(pred,pred) | not(pred) | v
// A bare value means eq. Values are numbers, true/false, bare words or
// double-quoted strings; they are coerced to the attribute type at discovery.
// Throws QueryError (P010 malformed, P011 unknown operator).
FilterExpr parse_query(std::string_view text);

}  // namespace diakit
