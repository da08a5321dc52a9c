#pragma once

#include <stdexcept>
#include <string>

namespace sprinter {

// Every failure the library reports derives from Error. The CLI maps the
// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Malformed or non-finite input data.
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid option combinations or parameter values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A request that would exceed a configured memory or size budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Model or prediction input whose columns do not resolve.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// The screening residual has zero sample variance, so every correlation is
// undefined.
class DegenerateResidualError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sprinter
