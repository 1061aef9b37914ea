#pragma once

#include <stdexcept>
#include <string>

namespace identrank {

// Bad user input: malformed files, out-of-support data, invalid arguments.
// The CLI maps this family to exit code 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure during an otherwise valid computation (exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A differentiable primitive was evaluated outside its domain, e.g. log(0).
class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// A linear system that must be solved has a rank-deficient matrix.
class SingularityError : public NumericalError {
public:
    SingularityError(const std::string &what, std::size_t rank, std::size_t expected)
        : NumericalError(what), rank_(rank), expected_(expected) {}

    std::size_t rank() const { return rank_; }
    std::size_t expected() const { return expected_; }

private:
    std::size_t rank_;
    std::size_t expected_;
};

// Two independent computations of the same quantity disagree.
class ConsistencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace identrank
