#pragma once

#include <stdexcept>
#include <string>

namespace clippers {

// Invalid construction parameters or configuration values.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A timestamp went backwards (or failed to advance where strict ordering is required).
class ClockError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed document: path file, config file, trace, session message.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Replay refused before any record was recomputed (version or config hash).
class ReplayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace clippers
