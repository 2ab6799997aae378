#pragma once

#include <stdexcept>
#include <string>

namespace ntm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of the operation (e.g. log of 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid static configuration (odd bit width for a split, even shift kernel, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ntm
