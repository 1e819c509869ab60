#pragma once

#include <stdexcept>
#include <string>

namespace gbc {

// Failure to open, read or write a file.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File exists and was read, but its contents are malformed or unsupported.
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gbc
