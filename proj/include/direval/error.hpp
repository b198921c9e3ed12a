#ifndef DIREVAL_ERROR_HPP
#define DIREVAL_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace direval {

// Base for every error the toolkit raises on bad input. The CLI maps these to
// exit code 2; anything else escaping a command is an internal error (3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ResourceError : public Error {
public:
    using Error::Error;
};

// Mathematically undefined input, e.g. zero-norm vectors or a constant score list.
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace direval

#endif // DIREVAL_ERROR_HPP
