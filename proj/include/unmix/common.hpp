#pragma once

#include <stdexcept>
#include <string>

namespace unmix {

// Error taxonomy, mirrored by the CLI exit codes:
//   usage errors -> 1 (raised by the argument parser)
//   ShapeError / ValueError / IoError -> 2
//   NumericError -> 3
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_shape(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

inline void require_value(bool ok, const std::string& msg) {
    if (!ok) throw ValueError(msg);
}

}  // namespace unmix
