#pragma once

#include <stdexcept>
#include <string>

namespace labelfuse {

// Base class for all errors raised by the library. `what()` carries the
// failing operation and the cause; subclasses let callers and tests
// distinguish failure categories.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// project_point with a point at or behind the camera plane.
class BehindCameraError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

// Text parsers report the 1-based line of the offending input.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

class UnsupportedModelError : public ParseError {
 public:
  UnsupportedModelError(const std::string& model, int line)
      : ParseError("unsupported camera model '" + model + "'", line),
        model_(model) {}
  const std::string& model() const { return model_; }

 private:
  std::string model_;
};

// Raster files with the wrong bit depth or channel count.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Tracker invoked without a usable seed mask.
class NoSeedError : public Error {
 public:
  using Error::Error;
};

class RegistrationFailedError : public Error {
 public:
  using Error::Error;
};

class InsufficientOverlapError : public RegistrationFailedError {
 public:
  using RegistrationFailedError::RegistrationFailedError;
};

class DegenerateFragmentError : public Error {
 public:
  using Error::Error;
};

// register_fragments: both candidates failed for a fragment pair.
class PipelineError : public Error {
 public:
  using Error::Error;
};

}  // namespace labelfuse
