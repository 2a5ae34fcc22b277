#pragma once

#include <stdexcept>
#include <string>

namespace bwroute {

/// Bad argument value (negative density, NaN coordinate, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent or malformed configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text input that could not be parsed. `row()` is 1-based and counts the header.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t row)
      : ConfigError(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// API called in a state where it is not allowed (e.g. stepping a finished episode).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A solver declined the instance (size guard).
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bwroute
