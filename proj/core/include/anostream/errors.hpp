#pragma once

#include <stdexcept>
#include <string>

namespace anostream {

// Error taxonomy shared by the whole engine. The CLI maps these onto exit
// codes: validation family -> 1, IoError -> 2, anything else -> 3.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : ValidationError {
    using ValidationError::ValidationError;
};

struct RangeError : ValidationError {
    using ValidationError::ValidationError;
};

struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace anostream
