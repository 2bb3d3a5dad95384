#pragma once

#include <stdexcept>
#include <string>

namespace cmmp {

// Operand shapes do not conform to an op's signature.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A NaN or Inf reached a primitive, or a primitive produced one.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was invoked under a fusion mode it does not support.
class ModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values, unknown config keys, bad dataset specs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base for all on-disk format problems (datasets and checkpoints).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ManifestMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace cmmp
