#pragma once

#include <cstddef>
#include <functional>

#include "ifl/errors.hpp"

namespace ifl::quad {

struct Options {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    std::size_t max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;        // accumulated error estimate
    std::size_t evaluations = 0;
    bool converged = false;
};

using Integrand = std::function<double(double)>;

// Adaptive Gauss-Kronrod 7-15 rule on a finite interval.
Result integrate(const Integrand& f, double a, double b, const Options& opt = {});

// Same, but throws QuadratureFailure instead of returning converged=false.
double integrate_or_throw(const Integrand& f, double a, double b, const Options& opt = {});

// Integral over [a, inf) via the rational substitution x = a + u/(1-u).
Result integrate_to_infinity(const Integrand& f, double a, const Options& opt = {});

// Integral of f(s) * s^power over [0, b] for power > -1, with the endpoint
// singularity removed by the substitution u = s^(1+power). f itself must be
// bounded near 0.
Result integrate_power_weight(const Integrand& f, double power, double b,
                              const Options& opt = {});

} // namespace ifl::quad
