#pragma once

#include <stdexcept>
#include <string>

namespace albdg {

/// Invalid user input: malformed config, inconsistent sizes, bad arguments.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical stage failed (non-convergence, residual above tolerance, size cap).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

}  // namespace albdg
