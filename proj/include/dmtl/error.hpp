#pragma once

#include <stdexcept>
#include <string>

namespace dmtl {

// Runtime failure: bad data, non-finite values, corrupt files.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller misuse: invalid arguments, missing inputs, out-of-range settings.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace dmtl
