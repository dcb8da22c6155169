#pragma once

#include <stdexcept>
#include <string>

namespace oscnet {

// Invalid arguments, broken invariants, malformed configuration.
// The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed file contents (bad CSV row, unreadable JSON).
// The CLI maps these to exit code 1.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures: missing files, unwritable paths.
// The CLI maps these to exit code 1.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace oscnet
