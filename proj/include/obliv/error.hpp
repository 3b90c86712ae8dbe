#pragma once

#include <stdexcept>
#include <string>

namespace obliv {

/// Bad caller input: violated preconditions, malformed configs, caps exceeded.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical or algorithmic failure at run time (eigensolver breakdown,
/// infeasible system, unroundable moments, ...).
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace obliv
