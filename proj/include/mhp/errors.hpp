#pragma once

#include <stdexcept>
#include <string>

namespace mhp {

// Bad user input: malformed catalogs, configs, out-of-range arguments.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation produced a non-finite or degenerate value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Exception = ValidationError>
inline void ensure(bool cond, const std::string& message) {
  if (!cond) throw Exception(message);
}

}  // namespace mhp
