#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mcm {

// Base class for everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad builder params, unparsable files, unknown names.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Missing (layer, dataflow) cost entry.
class LookupError : public Error {
public:
    using Error::Error;
};

// Argument outside an operation's domain (k = 0, off-grid position, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Not enough chiplets for a requested allocation.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Schedule cannot be evaluated (unassigned layer, bad position).
class EvaluationError : public Error {
public:
    using Error::Error;
};

// DSE space larger than the configured cap.
class CapExceededError : public Error {
public:
    CapExceededError(std::uint64_t count, std::uint64_t cap)
        : Error("search space of " + std::to_string(count) +
                " configurations exceeds cap " + std::to_string(cap)),
          count_(count), cap_(cap) {}
    std::uint64_t count() const { return count_; }
    std::uint64_t cap() const { return cap_; }

private:
    std::uint64_t count_;
    std::uint64_t cap_;
};

}  // namespace mcm
