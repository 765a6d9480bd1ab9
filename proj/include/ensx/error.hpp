#pragma once

#include <stdexcept>
#include <string>

namespace ensx {

// Precondition violated by an argument (empty sample, p outside (0,1), ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Estimation could not produce a usable result.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that cannot be combined (cell or duration mismatch, duplicates).
class MismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed external input: CSV/JSON rows, dates, values.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ensx
