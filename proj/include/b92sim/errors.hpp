#pragma once

#include <stdexcept>
#include <string>

namespace b92 {

/// Invalid or inconsistent configuration. Message names the offending key.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller violated an operation precondition (e.g. unsorted event list).
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace b92
