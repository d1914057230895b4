#pragma once

#include <stdexcept>
#include <string>

namespace surfield {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violation on user-supplied input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A statistic or metric that is undefined at some point (zero variance, singular metric).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Threshold solver could not bracket a root.
class NoRootError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or config contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace surfield
