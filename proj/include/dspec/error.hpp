#pragma once

#include <stdexcept>
#include <string>

namespace dspec {

/// Raised when user-supplied data (MDPs, rewards, configs) violates an invariant.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine fails in a way that exact arithmetic rules out.
class InternalError : public std::runtime_error {
 public:
  explicit InternalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace dspec
