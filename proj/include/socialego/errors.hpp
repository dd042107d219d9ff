#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace socialego {

// Bad argument shapes or values. Maps to std::invalid_argument so callers
// can catch either.
using InvalidArgument = std::invalid_argument;

// A required upstream artifact (checkpoint, dataset, trained model) is missing.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset file parse failures. Each failure mode has its own kind so callers
// can distinguish a truncated download from a schema problem.
class DatasetError : public std::runtime_error {
 public:
  enum class Kind { Io, CorruptHeader, DimensionMismatch, Truncated };

  DatasetError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, CorruptHeader, Truncated, HashMismatch, VersionSkew, WrongKind };

  CheckpointError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Configuration validation failure; lists every violated field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace socialego
