#pragma once

#include <stdexcept>
#include <string>

namespace streamlearn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The requested rate plan leaves no time for the communication phase.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration. `line` is 1-based, 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A file stream was asked for a sample past its last record.
class EndOfStream : public Error {
 public:
  using Error::Error;
};

}  // namespace streamlearn
