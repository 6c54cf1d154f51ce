#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tagcode {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Two points of the channel model coincide, so the free-space loss is singular.
class SingularGeometryError : public Error {
 public:
  using Error::Error;
};

// (I - B R) is numerically singular for some codeword.
class CouplingSingularityError : public Error {
 public:
  CouplingSingularityError(const std::string& message, std::size_t codeword_index)
      : Error(message), codeword_index_(codeword_index) {}

  std::size_t codeword_index() const noexcept { return codeword_index_; }

 private:
  std::size_t codeword_index_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& field, const std::string& message)
      : Error(field + ": " + message), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace tagcode
