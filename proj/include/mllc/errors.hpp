#pragma once

#include <stdexcept>
#include <string>

namespace mllc {

/// Malformed or inconsistent input (data, schema, options). CLI exit code 2.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite likelihood or an unrecoverable numerical state. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mllc
