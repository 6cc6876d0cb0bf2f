#pragma once

#include <stdexcept>
#include <string>

namespace dic {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor/image/batch dimensions do not match what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (out-of-range parameter, unknown key, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact (bitstream, checkpoint) is structurally malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact is framed correctly but its content is damaged
/// (e.g. a truncated payload).
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A numeric invariant was violated at runtime (NaN loss, out-of-range
/// binarizer input, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dic
