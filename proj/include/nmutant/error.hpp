#pragma once

#include <stdexcept>
#include <string>

namespace nmutant {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (CSV, IDX, JSON documents).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A value violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during forward/backward passes or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Any failure to obtain a label from an oracle. A detection run that hits one
// of these is aborted; it never degrades into "no label change".
class OracleError : public Error {
 public:
  using Error::Error;
};

class OracleUnavailable : public OracleError {
 public:
  using OracleError::OracleError;
};

class ProtocolError : public OracleError {
 public:
  using OracleError::OracleError;
};

}  // namespace nmutant
