#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dialeval {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Malformed input record. `line()` is 1-based, 0 when unknown.
class FormatError : public Error {
  public:
    FormatError(const std::string &what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// A record parsed fine but violates a domain invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Judge reply lacked a required label or number.
class ParseFailure : public Error {
  public:
    using Error::Error;
};

/// Correlation or agreement is undefined for the given input.
class UndefinedStatistic : public Error {
  public:
    using Error::Error;
};

class TransportError : public Error {
  public:
    TransportError(const std::string &what, bool retryable)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

  private:
    bool retryable_;
};

class AdapterError : public Error {
  public:
    using Error::Error;
};

} // namespace dialeval
