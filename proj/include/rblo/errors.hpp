#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rblo {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operands are well-shaped but not valid together (e.g. vectors at different base points).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// X + V lost rank; the QR retraction is undefined.
class DegenerateRetractionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared inside an iteration.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rblo
