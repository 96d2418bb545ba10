#pragma once

#include <stdexcept>
#include <string>

namespace flowdse {

/// Malformed or inconsistent user input (design-space file, scenario file,
/// command-line arguments). Maps to CLI exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken internal invariant detected while simulating. Maps to exit code 2.
class SimulationError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace flowdse
