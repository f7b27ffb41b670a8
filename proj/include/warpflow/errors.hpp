#pragma once

#include <stdexcept>
#include <string>

namespace warpflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegeneratePoint : public Error {
public:
  using Error::Error;
};

class InvalidShapeParameters : public Error {
public:
  using Error::Error;
};

class NonPositiveCoefficient : public Error {
public:
  using Error::Error;
};

class SolverFailure : public Error {
public:
  using Error::Error;
};

class DegenerateBoundaryData : public Error {
public:
  using Error::Error;
};

/// dt fell below dt_min while retrying a rejected step.
class TimestepUnderflow : public Error {
public:
  TimestepUnderflow(const std::string& what, double t) : Error(what), time(t) {}
  double time;
};

class InsufficientSeries : public Error {
public:
  using Error::Error;
};

class ConfigParseError : public Error {
public:
  ConfigParseError(const std::string& what, int line_no, std::string key_name)
      : Error(what), line(line_no), key(std::move(key_name)) {}
  int line;
  std::string key;
};

} // namespace warpflow
