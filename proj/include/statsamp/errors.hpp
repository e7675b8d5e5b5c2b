#pragma once

#include <stdexcept>
#include <string>

namespace statsamp {

/// Invalid or inconsistent experiment configuration; the CLI maps this to
/// exit code 2. Messages carry the offending field path.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Runtime numerical failure (non-finite state, divergence); the CLI maps
/// this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace statsamp
