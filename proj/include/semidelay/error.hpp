#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semidelay {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A query fell outside the domain where a function is defined.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// A delay profile has no declared asymptotic limit.
class NoLimitError : public Error {
 public:
  using Error::Error;
};

/// Malformed model data (bad links, non-monotone samples, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// The within-step fixed-point iteration did not settle.
class NonConvergentStep : public Error {
 public:
  NonConvergentStep(std::size_t step_index, const std::string& what)
      : Error(what), step_index_(step_index) {}

  std::size_t step_index() const noexcept { return step_index_; }

 private:
  std::size_t step_index_;
};

/// Root finding for a predicted consensus value failed.
class RootError : public Error {
 public:
  using Error::Error;
};

/// Scenario input could not be parsed or validated. `field` names the offending key path.
class InputError : public Error {
 public:
  InputError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace semidelay
