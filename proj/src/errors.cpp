#include "profwall/errors.hpp"

namespace profwall {

namespace {

std::string located(const std::string& file, int line, int column, const std::string& what) {
  return file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what;
}

std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  std::string out = "profile validation failed";
  for (const auto& d : diagnostics) out += "\n  " + d.path + ": " + d.message;
  return out;
}

}  // namespace

SyntaxError::SyntaxError(std::string file, int line, int column, const std::string& what)
    : std::runtime_error(located(file, line, column, what)),
      file_(std::move(file)),
      line_(line),
      column_(column) {}

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

FormatError::FormatError(const std::string& what, std::optional<std::size_t> line)
    : std::runtime_error(line ? "line " + std::to_string(*line) + ": " + what : what), line_(line) {}

}  // namespace profwall
