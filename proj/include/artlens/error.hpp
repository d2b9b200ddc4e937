#ifndef ARTLENS_ERROR_HPP
#define ARTLENS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace artlens {

/// Base class for every domain failure raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated file contents.
class FormatError : public Error {
public:
  using Error::Error;
};

/// A data-structure invariant does not hold (duplicate ids, zero rows, ...).
class InvariantError : public Error {
public:
  using Error::Error;
};

/// Vector or matrix shapes disagree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// An argument is outside the operation's domain (k = 0, bad ratios, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Training diverged (non-finite loss or gradient).
class TrainingError : public Error {
public:
  using Error::Error;
};

} // namespace artlens

#endif // ARTLENS_ERROR_HPP
