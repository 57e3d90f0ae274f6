#pragma once

#include <stdexcept>
#include <string>

namespace lan {

// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible tensor/layer shapes, bad axis, ...
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

// A forward or backward computation produced NaN or Inf.
class NumericFault : public Error {
 public:
  explicit NumericFault(const std::string& msg) : Error(msg) {}
};

// An exact-solver input is too large to enumerate.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& msg) : Error(msg) {}
};

// Malformed configuration, fixture or CSV input.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Checkpoint / file errors with a distinct kind per failure mode.
class IoError : public Error {
 public:
  enum class Kind { open_failed, version_mismatch, hash_mismatch, truncated, algorithm_mismatch, malformed };
  IoError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace lan
