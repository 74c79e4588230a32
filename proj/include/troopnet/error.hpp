#pragma once

#include <stdexcept>
#include <string>

namespace troopnet {

/// Invalid parameter, scenario or configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that parses but carries no usable data. Maps to CLI exit code 3.
class NoDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace troopnet
