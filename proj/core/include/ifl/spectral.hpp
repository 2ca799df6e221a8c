#pragma once

#include "ifl/kernels.hpp"

namespace ifl {

// High-frequency tail with quadratic weight: int_{|xi| > N} mu(dxi)/|xi|^2.
// May be +inf (e.g. at N = 0 for densities that are not integrable there).
double spectral_tail(const SpectralMeasure& mu, double N);

// Low-frequency mass mu{ |xi| <= N }.
double spectral_bulk(const SpectralMeasure& mu, double N);

// Smallest N >= 0 whose tail drops below (2pi)^d / (32 (p-1) lambda^2 G),
// where G is the integrated time covariance up to the horizon. Found by
// geometric bracket growth from N = 1 (capped at 1e12, else
// NoFiniteThreshold) followed by bisection. The comparison is closed (<=).
double frequency_threshold(const SpectralMeasure& mu, int p, double lambda,
                           double gamma_t);

// sqrt(bulk/tail) at the threshold frequency. Conventions at the edges:
// tail = +inf gives 0; tail = 0 with positive bulk raises ScaleUndefined.
double theta_scale(const SpectralMeasure& mu, const TimeCovariance& gamma, int p,
                   double lambda, double t);

// Integrated-covariance scales driven by the singularity exponent:
// eta = G(t delta^2)^{1/(2-beta)}, vartheta = G(t)^{1/(2-beta)}. Raise
// ScaleUndefined when the kernel has no usable exponent or beta >= 2.
double eta_scale(const TimeCovariance& gamma, const SpaceCovariance& lambda,
                 double t, double delta);
double vartheta_scale(const TimeCovariance& gamma, const SpaceCovariance& lambda,
                      double t);

struct SpectralScales {
    int p = 2;
    double t = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
    double gamma_t = 0.0;   // integrated time covariance at t
    double threshold = 0.0; // N at which the tail condition closes
    double tail = 0.0;      // spectral_tail at threshold
    double bulk = 0.0;      // spectral_bulk at threshold
    double theta = 0.0;
    double eta = 0.0;
    double vartheta = 0.0;
};

SpectralScales scale_functions(const SpectralMeasure& mu, const TimeCovariance& gamma,
                               const SpaceCovariance& lambda, int p, double coupling,
                               double t, double delta);

} // namespace ifl
