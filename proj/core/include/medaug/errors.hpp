// Exception types shared by all medaug components.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace medaug {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor shape disagreement; the message names both shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Precondition violated on otherwise well-formed input.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Out-of-range index (class target, token id, ...).
class IndexError : public Error {
public:
    using Error::Error;
};

// Malformed file content; carries the 1-based line it was found on.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Synthetic generation could not reach the requested count within the
// retry budget; reports how far it got.
class GenerationStarvation : public Error {
public:
    GenerationStarvation(std::size_t achieved, std::size_t requested)
        : Error("synthetic generation starved: produced " + std::to_string(achieved) +
                " of " + std::to_string(requested) + " requested documents"),
          achieved_(achieved),
          requested_(requested) {}

    std::size_t achieved() const noexcept { return achieved_; }
    std::size_t requested() const noexcept { return requested_; }

private:
    std::size_t achieved_;
    std::size_t requested_;
};

// Wraps a failure inside a named pipeline stage.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(stage) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace medaug
