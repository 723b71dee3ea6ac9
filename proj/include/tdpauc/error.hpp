#pragma once

#include <stdexcept>
#include <string>

namespace tdpauc {

// Base of every error the library raises. The CLI maps the subclasses to
// distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files, missing columns, unparseable cells.
class InputError : public Error {
 public:
  using Error::Error;
};

// Argument outside its admissible range (bandwidth, alpha, level, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Data that leaves an estimator undefined: no events, no cases or no
// controls at a requested time, empty time grid.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-finite variance, quadrature or root finding that
// did not reach its tolerance, internal consistency checks.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace tdpauc
