#pragma once

#include <stdexcept>

namespace psvae {

// Problems with user-supplied data: malformed CSV, unknown labels,
// out-of-range values, unreadable or corrupt model files.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API contract misuse: mismatched shapes, non-one-hot targets.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite values encountered during optimization.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace psvae
