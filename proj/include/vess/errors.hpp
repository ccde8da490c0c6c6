#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vess {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical_failure"; }
};

class UnboundedCapacityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unbounded_capacity"; }
};

class NoViablePriceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "no_viable_price"; }
};

// Raised when a price sits on a threshold where the optimal capacity is set-valued.
class AmbiguousPriceError : public Error {
 public:
  AmbiguousPriceError(const std::string& what, double lower, double upper)
      : Error(what), lower_(lower), upper_(upper) {}
  const char* kind() const noexcept override { return "ambiguous_price"; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  double lower_;
  double upper_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  const char* kind() const noexcept override { return "parse"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace vess
