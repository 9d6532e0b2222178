#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace profwall {

struct Diagnostic {
  std::string path;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

// Malformed profile source (YAML subset or profile schema).
class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::string file, int line, int column, const std::string& what);
  const std::string& file() const { return file_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string file_;
  int line_;
  int column_;
};

// Dangling reference, include cycle, missing file or override path.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// Malformed packet trace (pcap or JSONL).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what, std::optional<std::size_t> line = std::nullopt);
  std::optional<std::size_t> line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

class CompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateDevice : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ClockRegression : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadParams : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace profwall
