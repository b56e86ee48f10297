#include "diakit/diagnostic.hpp"

#include <algorithm>

namespace diakit {

std::string format_diagnostic(const Diagnostic& d) {
  std::string out = d.loc.file;
  out += ':' + std::to_string(d.loc.line) + ':' + std::to_string(d.loc.column) + ": ";
  out += d.severity == Severity::error ? "error" : "warning";
  out += '[' + d.code + "]: " + d.message;
  return out;
}

bool has_errors(std::span<const Diagnostic> diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::error; });
}

}  // namespace diakit
