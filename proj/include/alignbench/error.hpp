#pragma once

#include <stdexcept>
#include <string>

namespace alignbench {

// Base of every exception thrown by the library. The C API maps each
// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition on arguments (not shapes) was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

// An alignment kind was combined with a mechanism that does not support it.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace alignbench
