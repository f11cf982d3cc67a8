#pragma once

#include <stdexcept>
#include <string>

namespace diffcore {

// Bad runtime data fed to an operation (shape mismatch, non-scalar loss, ...).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally invalid configuration (non-positive output size, tau <= 0, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace diffcore
