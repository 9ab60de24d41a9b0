#pragma once

#include <stdexcept>
#include <string>

namespace lcrdo {

// Invalid parameters or configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Channel calibration could not reach its target. Maps to CLI exit code 3.
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ConfigError(message);
}

}  // namespace lcrdo
