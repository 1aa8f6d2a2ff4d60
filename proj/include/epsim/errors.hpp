#pragma once

#include <stdexcept>
#include <string>

namespace epsim {

struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CompatibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PositivityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CharacteristicEscape : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FactorizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration problem; `line` is 0 when not tied to a file line.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line(line) {}
    int line;
};

}  // namespace epsim
