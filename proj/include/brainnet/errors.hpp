#pragma once

#include <stdexcept>

namespace brainnet {

// Thrown for malformed or inconsistent input files and datasets (CLI exit 2).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on numerical failures such as training divergence (CLI exit 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace brainnet
