#pragma once

#include <stdexcept>
#include <string>

namespace gaussnet {

/// Bad argument or configuration (out-of-range efficiency, duplicate label, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed external input data (covariance matrix files, split specs).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The numbers themselves are unusable: a covariance that is not positive
/// definite, an unphysical state, a singular block.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

inline void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InvalidArgument(std::string(name) + " must lie in [0,1], got " + std::to_string(v));
  }
}

}  // namespace detail
}  // namespace gaussnet
