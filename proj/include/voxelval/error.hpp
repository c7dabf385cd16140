#pragma once

#include <stdexcept>
#include <string>

namespace voxelval {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two volumes that must be co-registered are not.
class GeometryMismatch : public Error {
 public:
  using Error::Error;
};

/// An operation that needs a non-empty region received an empty mask.
class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace voxelval
