#pragma once

#include <stdexcept>
#include <string>

namespace wavefreeze {

// Invalid input or configuration; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Solver breakdown, blow-up or violated numerical hypothesis; exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace wavefreeze
