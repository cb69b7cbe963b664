#pragma once

#include <stdexcept>
#include <string>

namespace stcos {

// Error taxonomy matches the CLI exit codes: config=2, data=3, numeric=4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGeometryError : DataError {
    using DataError::DataError;
};

struct NotPositiveDefiniteError : NumericError {
    using NumericError::NumericError;
};

} // namespace stcos
