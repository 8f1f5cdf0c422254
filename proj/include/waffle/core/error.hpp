#pragma once

#include <stdexcept>
#include <string>

namespace waffle {

// Bad user input: unknown names, invalid arguments, malformed config files.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing/corrupt data files, checksum mismatches.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Stored artifact fails its integrity digest.
class TamperError : public std::runtime_error {
public:
    explicit TamperError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training; carries the step at which it appeared.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, long step)
        : std::runtime_error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

}  // namespace waffle
