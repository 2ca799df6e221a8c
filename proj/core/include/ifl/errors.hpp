#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ifl {

// Base class for every typed failure raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// A distribution-valued kernel was evaluated pointwise.
class DistributionEval : public DomainError {
public:
    using DomainError::DomainError;
};

// Bisection for the spectral threshold exceeded the bracket growth cap.
class NoFiniteThreshold : public Error {
public:
    using Error::Error;
};

// A scale function was requested where its defining ratio is 0/0.
class ScaleUndefined : public Error {
public:
    using Error::Error;
};

// Adaptive quadrature could not reach the requested tolerance.
class QuadratureFailure : public Error {
public:
    using Error::Error;
};

// Two evaluation routes for the same quantity disagree beyond tolerance.
class IdentityMismatch : public Error {
public:
    IdentityMismatch(const std::string& what, double lhs, double rhs)
        : Error(what), lhs(lhs), rhs(rhs) {}
    double lhs = 0.0;
    double rhs = 0.0;
};

// Every Monte Carlo replica carried zero initial-condition mass, so the
// estimate is vacuous. Carries enough context to diagnose the miss.
class AllZeroMass : public Error {
public:
    AllZeroMass(const std::string& what, std::size_t n_rep, double expected_log_mass)
        : Error(what), n_rep(n_rep), expected_log_mass(expected_log_mass) {}
    std::size_t n_rep = 0;
    // Log of the per-replica mass the estimator expected to see (-inf when
    // the support is unreachable at this accuracy).
    double expected_log_mass = 0.0;
};

// A front scan contains no sign change to bracket.
class NoBracket : public Error {
public:
    using Error::Error;
};

// A bound or restriction does not apply to the supplied kernel combination.
class NotApplicable : public Error {
public:
    using Error::Error;
};

// Invalid or incomplete experiment configuration; message names the key.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ifl
