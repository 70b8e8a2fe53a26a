#ifndef AHB_ERRORS_HPP
#define AHB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ahb {

// Every error raised by the library derives from Error. The concrete type
// decides the status code surfaced through the C API and the CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (flags, JSON options, split fractions).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A column named by the schema is missing from the input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Malformed input text (CSV cell, JSON document).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// No box satisfies the minimum-control constraint for a unit.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Outcome model could not be fitted.
class FitError : public Error {
 public:
  using Error::Error;
};

// The requested capability is not provided by the given model or data.
class UnavailableError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ahb

#endif  // AHB_ERRORS_HPP
