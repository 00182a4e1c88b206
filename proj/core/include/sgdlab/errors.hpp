#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sgdlab {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A documented precondition was violated by the caller.
class ContractViolation : public Error {
public:
  using Error::Error;
};

// Operation is only defined for a particular input dimension.
class UnsupportedDimension : public Error {
public:
  using Error::Error;
};

// Normalized distance with a zero-norm reference.
class UndefinedDenominator : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// CIFAR batch file whose length is not a whole number of records.
class MalformedFile : public IoError {
public:
  MalformedFile(std::string file, const std::string& what)
      : IoError(what), file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

private:
  std::string file_;
};

// CIFAR record with an out-of-range label byte.
class CorruptRecord : public IoError {
public:
  CorruptRecord(std::string file, std::size_t record, const std::string& what)
      : IoError(what), file_(std::move(file)), record_(record) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t record_index() const noexcept { return record_; }

private:
  std::string file_;
  std::size_t record_;
};

enum class CheckpointErrorKind { VersionMismatch, CountMismatch, Truncated, BadHeader };

class CheckpointError : public IoError {
public:
  CheckpointErrorKind kind;
  CheckpointError(CheckpointErrorKind k, const std::string& what) : IoError(what), kind(k) {}
};

}  // namespace sgdlab
