#pragma once

#include <stdexcept>
#include <string>

namespace metarep {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Inconsistent or incomplete configuration (policies, power rules, specs).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or invalid input data (CSV rows, duplicate ids, I/O).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quadrature underflow, singular Hessian, failed convergence.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A statistic was requested over an empty conditioning set.
class EmptySetError : public std::runtime_error {
public:
    explicit EmptySetError(const std::string& what)
        : std::runtime_error("empty conditioning set: " + what) {}
};

}  // namespace metarep
