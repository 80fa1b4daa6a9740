#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geoclade {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input. `line` is 1-based, 0 when the problem is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Input carries no variation to infer from (a single haplotype).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Network construction exceeded its intermediate-node budget.
class SaturationError : public Error {
 public:
  using Error::Error;
};

/// An exact enumeration was requested above its configured cap.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

/// A file or directory could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A state the algorithms guarantee cannot happen was reached.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace geoclade
