#pragma once

#include <stdexcept>
#include <string>

namespace yatnn {

// Error taxonomy used across the library. All carry a plain message; callers
// that need to distinguish categories catch the concrete type.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file contents (bad magic, unexpected layout).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// OS-level IO failures (missing file, short read, unwritable directory).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two inputs that must agree with each other do not (e.g. image/label counts).
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value detected where the contract requires finite data.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace yatnn
