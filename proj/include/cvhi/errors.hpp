#pragma once

#include <stdexcept>
#include <string>

namespace cvhi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or dimensionally inconsistent input.
class InputError : public Error {
 public:
  using Error::Error;
};

// A point fell outside the set or domain an operation requires.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An internal solve failed to reach its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// No closed-form constant exists for this operator family.
class UnsupportedEstimate : public Error {
 public:
  using Error::Error;
};

}  // namespace cvhi
