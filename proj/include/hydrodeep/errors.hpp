#pragma once

#include <stdexcept>
#include <string>

namespace hydrodeep {

// Error taxonomy shared by all modules. Each maps to a CLI exit code:
// usage/config problems -> 1, data problems -> 2, numeric verification -> 3.

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParameterError : std::runtime_error {
    explicit ParameterError(const std::string& msg) : std::runtime_error(msg) {}
};

// Not enough rows for a window/convolution or an empty sequence.
struct WindowError : std::runtime_error {
    explicit WindowError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate statistics (constant observations, zero totals).
struct DegenerateError : std::runtime_error {
    explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BuildError : std::runtime_error {
    explicit BuildError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    explicit ParseError(const std::string& msg) : std::runtime_error(msg), line_number(0) {}
    std::size_t line_number;
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hydrodeep
