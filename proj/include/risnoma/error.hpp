#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace risnoma {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad shapes, dimensions or configuration values.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// API misuse (e.g. backward from a non-scalar node).
class UsageError : public Error {
public:
    using Error::Error;
};

// Numerically degenerate input: zero-norm channels, rank-deficient H, ...
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Malformed binary file. Carries the byte offset at which decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

// Non-finite gradients or other failures inside the training loop.
class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace risnoma
