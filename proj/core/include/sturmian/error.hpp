#pragma once

#include <stdexcept>
#include <string>

namespace sturmian {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on caller-supplied data was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not reach the requested accuracy, or an
/// internal consistency check on computed values failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant of the band tree does not hold for the computed
/// bands. `diagnostics()` carries a JSON document describing the offending
/// intervals.
class TreeInvariantError : public Error {
 public:
  TreeInvariantError(const std::string& what, std::string diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

}  // namespace sturmian
