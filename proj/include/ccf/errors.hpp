#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace ccf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input-side failures. The CLI maps all of these to exit code 2.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DesignIntegrityError : public Error {
 public:
  using Error::Error;
};

// Numerical failures. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class RankError : public NumericalError {
 public:
  RankError(const std::string& what, Eigen::VectorXd null_direction)
      : NumericalError(what), null_direction_(std::move(null_direction)) {}
  const Eigen::VectorXd& null_direction() const { return null_direction_; }

 private:
  Eigen::VectorXd null_direction_;
};

class DegenerateVarianceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ccf
