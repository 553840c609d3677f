#pragma once

#include <stdexcept>
#include <string>

namespace stochmatch {

/// Malformed input: bad JSON, schema violations, invariant violations.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An enumeration, state space or LP exceeded its configured cap.
/// The CLI maps this to exit code 2.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A broken internal invariant. The CLI maps this to exit code 3.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void ensure(bool condition, const std::string& what) {
  if (!condition) throw InternalError(what);
}

}  // namespace stochmatch
