#pragma once

#include <stdexcept>
#include <string>

namespace sspo {

// CLI exit codes: 0 success, 2 configuration error, 3 numeric error, 4 I/O error.
enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_numeric = 3,
    exit_io = 4,
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sspo
