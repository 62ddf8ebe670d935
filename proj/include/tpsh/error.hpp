/*
 * error.hpp — exception type shared by every tpsh module.
 *
 * Each error carries the module that raised it so the CLI can emit a
 * machine-readable error line without string matching.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tpsh {

enum class ErrorKind {
    invalid_argument,
    convergence,
    not_factorizable,
    format,
    io,
};

inline std::string_view to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::convergence:      return "convergence";
    case ErrorKind::not_factorizable: return "not_factorizable";
    case ErrorKind::format:           return "format";
    case ErrorKind::io:               return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, const std::string& what)
        : std::runtime_error(what), kind_(kind), module_(std::move(module)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }

private:
    ErrorKind kind_;
    std::string module_;
};

} // namespace tpsh
