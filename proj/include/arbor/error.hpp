#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arbor {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (grammar files, ASCII STL). Carries a 1-based line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Binary payload that does not match its declared layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Parameter or configuration values that violate a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace arbor
