#pragma once

#include <stdexcept>
#include <string>

namespace newsgen {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (bad JSONL record, bad config field, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint tensor shapes disagree with the manifest or config.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint weight blob shorter than the manifest promises.
class TruncatedError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint format version is not one this build reads.
class VersionError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during training (non-finite or diverging loss).
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// A pipeline stage was asked to run before the stage producing its inputs.
class PrerequisiteError : public Error {
 public:
  PrerequisiteError(const std::string& what, std::string stage)
      : Error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Content failed a publishing rule check.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace newsgen
