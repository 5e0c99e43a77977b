// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sct {

// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand extents do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A configuration value is invalid or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Out-of-range class or element index.
class IndexError : public Error {
 public:
  using Error::Error;
};

// An API precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file. Carries the byte offset of the failure.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Filesystem failures, always naming the path involved.
class IoError : public Error {
 public:
  using Error::Error;
};

// An attention trace does not have the geometry a consumer expects.
class TraceError : public Error {
 public:
  using Error::Error;
};

// Raised when training diverges.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace sct
