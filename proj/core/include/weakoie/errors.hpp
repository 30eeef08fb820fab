#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace weakoie {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class NonTreeParse : public ParseError {
 public:
  using ParseError::ParseError;
};

class IOError : public Error {
 public:
  using Error::Error;
};

class NoPredicateSpan : public Error {
 public:
  NoPredicateSpan() : Error("tag sequence has no predicate span") {}
};

class SpanOutOfBounds : public Error {
 public:
  using Error::Error;
};

class EmptyGold : public Error {
 public:
  EmptyGold() : Error("gold set is empty") {}
};

// Numeric failures (non-finite loss or gradient). The CLI maps these to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public NumericError {
 public:
  using NumericError::NumericError;
};

class NonFiniteGradient : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace weakoie
