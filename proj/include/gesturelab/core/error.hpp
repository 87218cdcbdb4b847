#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gesturelab {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Structural failures in input documents (BVH, WAV, config files). Carries
// the 1-based line number when the format is line oriented.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

} // namespace gesturelab
