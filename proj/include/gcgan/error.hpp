#pragma once

#include <stdexcept>
#include <string>

namespace gcgan {

/// Invalid user-facing configuration (bad flag combinations, missing dirs, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/array shape incompatibility.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem and codec failures; message names the offending path.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training diverged (non-finite loss) or another numeric invariant broke.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gcgan
