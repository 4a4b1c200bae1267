#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace procstruct {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidNetError : public Error {
 public:
  using Error::Error;
};

class NotEnabledError : public Error {
 public:
  using Error::Error;
};

/// Play-out could not complete a trace within the retry budget.
class PlayoutError : public Error {
 public:
  using Error::Error;
};

class BudgetExceededError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class MetricsError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when training produces a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error("diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace procstruct
