#pragma once

#include <stdexcept>
#include <string>

namespace convsim {

// Invalid shapes, invalid tiling parameters, kernel/input mismatch.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed tensor files or sweep-spec files.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// A configuration that does not fit in shared or constant memory.
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violations of the memory model itself (bad widths, non-integral n).
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace convsim
