#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcflow {

struct SourceLoc {
  uint32_t line = 0;  // 1-based; 0 means "no location"
  uint32_t col = 0;

  bool valid() const { return line != 0; }
  std::string to_string() const;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourceLoc loc;

  std::string to_string() const;
};

// Fatal front-end/load error. Non-fatal findings travel as Diagnostic lists.
class CompileError : public std::runtime_error {
 public:
  CompileError(std::string message, SourceLoc loc)
      : std::runtime_error(format(message, loc)), diag_{Severity::Error, std::move(message), loc} {}

  const Diagnostic& diag() const { return diag_; }

 private:
  static std::string format(const std::string& message, SourceLoc loc);
  Diagnostic diag_;
};

// Error raised while evaluating values (type mismatch, div by zero, ...).
// Callers attach node/tag or body-line context before surfacing it.
class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& message) : std::runtime_error(message) {}
};

bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace tcflow
