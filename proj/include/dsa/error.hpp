#pragma once

#include <stdexcept>
#include <string>

namespace dsa {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Tensor dimension mismatches; the message names the offending shapes.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// A call violated an operation's precondition.
class ContractError : public Error {
  public:
    using Error::Error;
};

/// Invalid model or run configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Malformed input file (bad magic, truncation, unknown class name, ...).
class FormatError : public Error {
  public:
    using Error::Error;
};

/// A non-finite value appeared in a computation.
class NumericError : public Error {
  public:
    using Error::Error;
};

} // namespace dsa
