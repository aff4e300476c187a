// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_ERRORS_HPP
#define OICSR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace oicsr {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not satisfy an op's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad values (labels out of range, indices out of range, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. backward() from a non-scalar node.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Model architecture does not chain or is otherwise malformed.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incompatible configuration (regularizer vs. model, unknown keys, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pruning plan does not match the model it is applied to.
class SurgeryError : public Error {
 public:
  using Error::Error;
};

/// Loss became non-finite during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedFileError : public DataError {
 public:
  using DataError::DataError;
};

class CountMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointVersionError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointCorruptError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace oicsr

#endif  // OICSR_ERRORS_HPP
