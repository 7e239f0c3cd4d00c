#pragma once

#include <stdexcept>
#include <string>

namespace genreforge {

// Malformed container or unsupported codec in an input file.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor/grid dimensions.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent network or training configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Manifest / index parse failure; the message carries the line number.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace genreforge
