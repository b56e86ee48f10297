#pragma once

#include <span>
#include <string>
#include <vector>

namespace diakit {

// 1-based position inside a source file.
struct Location {
  std::string file;
  int line = 1;
  int column = 1;

  bool operator==(const Location&) const = default;
};

enum class Severity { error, warning };

// A compiler message. `code` is P### for the parser and E### for the checker.
struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  Location loc;
};

// Renders `file:line:col: severity[code]: message`.
std::string format_diagnostic(const Diagnostic& d);

bool has_errors(std::span<const Diagnostic> diagnostics);

}  // namespace diakit
