#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mistp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidMinibatch : public Error {
 public:
  using Error::Error;
};

class InvalidBatchSize : public Error {
 public:
  using Error::Error;
};

class InvalidLabel : public Error {
 public:
  using Error::Error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class InvalidSmoothing : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// All candidate values of a step were NaN or infinite, or an iterate left
/// the finite range.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

class UnsupportedMethod : public Error {
 public:
  using Error::Error;
};

class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

class BoundInfeasible : public Error {
 public:
  using Error::Error;
};

class NoViableStepsize : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line (LIBSVM) or byte offset context (IDX, reported as 0).
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mistp
