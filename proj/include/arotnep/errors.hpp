#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arotnep {

// Base for every error raised by the library. Callers that only care about
// "something went wrong in the planner" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class NodeLimitExceeded : public Error {
public:
    using Error::Error;
};

class InfeasibleOperation : public Error {
public:
    using Error::Error;
};

class MasterInfeasible : public Error {
public:
    using Error::Error;
};

class IterationLimit : public Error {
public:
    using Error::Error;
};

class IOError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(std::size_t index, const std::string& what)
        : Error(what), index_(index) {}

    /// Zero-based index of the leading minor that failed.
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

} // namespace arotnep
