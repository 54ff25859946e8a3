#pragma once

#include <stdexcept>
#include <string>

namespace terrafeat {

// Precondition violations raise std::invalid_argument. The two types below
// cover failures that are not the caller's fault.

/// File could not be opened, read, parsed or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed (no valid hypothesis, degenerate system, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace terrafeat
