#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsmb {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, const std::string& source = {})
      : Error((source.empty() ? "" : source + ": ") + (line > 0 ? "line " + std::to_string(line) + ": " : "") + what),
        line_(line),
        detail_(what) {}

  std::size_t line() const noexcept { return line_; }
  /// Message without the source and line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

/// Data violates a precondition (too short, too few classes, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Bad command-line or configuration input.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsmb
