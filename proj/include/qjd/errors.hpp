#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qjd {

// Bad input: anything the caller could have validated up front.
// The CLI maps this family to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based position of the offending cell.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : ValidationError("line " + std::to_string(line) + ", column " +
                        std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A numerical routine ran out of budget before reaching the requested
// tolerance. Carries the bound it did achieve. CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& message, double achieved, double requested)
      : std::runtime_error(message + " (achieved " + std::to_string(achieved) +
                           ", requested " + std::to_string(requested) + ")"),
        achieved_(achieved),
        requested_(requested) {}

  explicit NumericError(const std::string& message)
      : std::runtime_error(message), achieved_(0.0), requested_(0.0) {}

  double achieved() const { return achieved_; }
  double requested() const { return requested_; }

 private:
  double achieved_;
  double requested_;
};

}  // namespace qjd
