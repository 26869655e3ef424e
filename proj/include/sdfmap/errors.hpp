#pragma once

#include <stdexcept>
#include <string>

namespace sdfmap {

// Malformed or truncated on-disk data.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Coordinate or index outside the representable range.
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument to a library call.
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sdfmap
