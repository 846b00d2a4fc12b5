#pragma once

#include <stdexcept>
#include <string>

namespace coco {

// Exit-code mapping for the CLI: config 1, data 2, cap 3, verification 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct InvalidProgram : ConfigError {
  using ConfigError::ConfigError;
};

struct MissingInput : ConfigError {
  using ConfigError::ConfigError;
};

struct DataError : Error {
  using Error::Error;
};

struct ParseError : DataError {
  ParseError(const std::string& what, long line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line(line) {}
  long line;
};

struct DimensionMismatch : DataError {
  using DataError::DataError;
};

struct SupportViolation : DataError {
  using DataError::DataError;
};

struct EmptyDataset : DataError {
  using DataError::DataError;
};

struct EmptyCalibration : DataError {
  using DataError::DataError;
};

struct CapExceeded : Error {
  using Error::Error;
};

struct VerificationFailure : Error {
  using Error::Error;
};

}  // namespace coco
