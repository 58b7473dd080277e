#pragma once

#include <stdexcept>
#include <string>

namespace ttp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Tensor or parameter dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A backward pass was handed a cache that does not belong to the inputs.
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Optimizer saw a non-finite gradient; training cannot continue.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

enum class ParseErrorKind {
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kInvalidHeader,
  kMvOutOfRange,
  kCorruptReference,
  kTrailingData,
};

const char* to_string(ParseErrorKind kind);

/// Raised while reading any of the binary file formats.
class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, const std::string& detail)
      : Error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ParseErrorKind kind() const { return kind_; }

 private:
  ParseErrorKind kind_;
};

/// File missing, unreadable or unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A segment without P-frames cannot yield an (MV, R) pair.
class NoPFramesError : public Error {
 public:
  using Error::Error;
};

}  // namespace ttp
