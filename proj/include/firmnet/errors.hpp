#pragma once

#include <stdexcept>
#include <string>

namespace firmnet {

// Error categories map onto CLI exit codes: config -> 1, data -> 2, numeric -> 3.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

class ParseError : public DataError {
public:
  ParseError(const std::string& msg, std::size_t line)
      : DataError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Raised when the spectral guard rejects a solve; carries the radius estimate.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& msg, double rho_estimate)
      : Error(msg + " (spectral radius estimate " + std::to_string(rho_estimate) + ")"),
        rho_(rho_estimate) {}
  double rho_estimate() const { return rho_; }

private:
  double rho_;
};

}  // namespace firmnet
