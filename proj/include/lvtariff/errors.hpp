#pragma once

#include <stdexcept>

namespace lvtariff {

// Error categories map onto the CLI exit codes (2..5).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PowerFlowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lvtariff
