#pragma once

#include "ifl/errors.hpp"

namespace ifl::sf {

// Gamma function for x > 0 (Lanczos approximation, g = 7, 9 terms).
double gamma_fn(double x);

// log(Gamma(x)) for x > 0; safe where gamma_fn would overflow.
double log_gamma(double x);

// Bessel function of the first kind divided by (x/2)^nu. Shares its positive
// zeros with J_nu and stays regular at the origin, which makes it the right
// object for root scanning.
double bessel_j_scaled(double nu, double x);

// Smallest positive zero of J_nu, nu >= -1/2. Power-series sign scan plus
// bisection; absolute accuracy about 1e-12.
double bessel_first_zero(double nu);

struct MittagLefflerResult {
    double value = 0.0;     // +inf when the asymptotic regime overflows
    double log_value = 0.0; // always finite for z >= 0
    bool asymptotic = false;
    bool overflow = false;
};

// E_a(z) = sum z^n / Gamma(1 + a n) for a in (0,1], z >= 0. Switches from
// partial summation to the exponential asymptotic (1/a) exp(z^{1/a}) once
// z^{1/a} exceeds 30.
MittagLefflerResult mittag_leffler(double a, double z);

// Leading-order log of P{ sup_{[0,1]} |B_s| <= eps } for d-dimensional
// Brownian motion: -j_nu^2 / (2 eps^2) with nu = (d-2)/2.
double small_ball_log_asymptotic(int d, double eps);

struct VolumeConstants {
    int d = 0;
    double ball_volume = 0.0;  // volume of the unit ball
    double sphere_area = 0.0;  // surface measure of the unit sphere
    double bessel_index = 0.0; // (d-2)/2
    double bessel_zero = 0.0;  // first positive zero of J_{(d-2)/2}
};

VolumeConstants volume_constants(int d);

double unit_ball_volume(int d);
double unit_sphere_area(int d);

// Standard normal CDF and a log version stable far into the left tail.
double normal_cdf(double z);
double log_normal_cdf(double z);

// log( Phi(b) - Phi(a) ) for a < b, stable in both tails.
double log_gaussian_interval_mass(double a, double b);

} // namespace ifl::sf
