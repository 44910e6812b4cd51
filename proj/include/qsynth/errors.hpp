#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qsynth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class BudgetExhausted : public Error {
public:
    BudgetExhausted(std::size_t requested, std::size_t remaining)
        : Error("query budget exhausted: requested " + std::to_string(requested) +
                " label(s), " + std::to_string(remaining) + " remaining"),
          requested_(requested), remaining_(remaining) {}

    std::size_t requested() const noexcept { return requested_; }
    std::size_t remaining() const noexcept { return remaining_; }

private:
    std::size_t requested_;
    std::size_t remaining_;
};

/// Both endpoints of a pair fall on the same side of the substitute boundary.
class BoundaryLost : public Error {
public:
    using Error::Error;
};

class NoOppositePair : public Error {
public:
    using Error::Error;
};

class DegenerateDirection : public Error {
public:
    using Error::Error;
};

class MalformedFile : public Error {
public:
    MalformedFile(const std::string& what, std::size_t offset)
        : Error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed. The original exception is nested
/// (std::rethrow_if_nested recovers it).
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error("stage '" + stage + "': " + cause), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace qsynth
