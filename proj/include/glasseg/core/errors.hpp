#pragma once

#include <stdexcept>

namespace glasseg {

/// Out-of-contract input data: bad values, shape mismatches, unreadable files.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration. The command-line tool maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace glasseg
