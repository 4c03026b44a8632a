#pragma once

#include <stdexcept>
#include <string>

namespace adtgen {

/// Error with a source position, thrown by the text parsers.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column)
      : std::runtime_error(message + " (line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Internal invariant violated; maps to exit code 2 in the CLI.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& message)
      : std::logic_error(message) {}
};

}  // namespace adtgen
