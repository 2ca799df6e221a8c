#include "ifl/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ifl::sf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Lanczos coefficients for g = 7.
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7};

double lanczos_sum(double z) {
    double x = kLanczos[0];
    for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + i);
    return x;
}

} // namespace

double gamma_fn(double x) {
    if (!(x > 0.0)) throw DomainError("gamma_fn requires x > 0");
    if (x > 171.7) return kInf;
    const double z = x - 1.0;
    const double t = z + 7.5;
    return std::sqrt(2.0 * kPi) * std::pow(t, z + 0.5) * std::exp(-t) * lanczos_sum(z);
}

double log_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("log_gamma requires x > 0");
    const double z = x - 1.0;
    const double t = z + 7.5;
    return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t +
           std::log(lanczos_sum(z));
}

double bessel_j_scaled(double nu, double x) {
    // sum_k (-1)^k (x^2/4)^k / (k! Gamma(nu+k+1))
    const double q = -0.25 * x * x;
    double term = 1.0 / gamma_fn(nu + 1.0);
    double sum = term;
    for (int k = 1; k <= 400; ++k) {
        term *= q / (k * (nu + k));
        sum += term;
        if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300) && k > 4) break;
    }
    return sum;
}

double bessel_first_zero(double nu) {
    if (nu < -0.5) throw DomainError("bessel_first_zero requires nu >= -1/2");
    const double step = 0.1 * std::max(1.0, std::sqrt(nu + 1.0));
    double lo = 0.0;
    double hi = step;
    // The scaled series starts positive at 0; walk until the first sign change.
    int guard = 0;
    while (bessel_j_scaled(nu, hi) > 0.0) {
        lo = hi;
        hi += step;
        if (++guard > 100000) throw Error("bessel_first_zero: no sign change found");
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (bessel_j_scaled(nu, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

MittagLefflerResult mittag_leffler(double a, double z) {
    if (!(a > 0.0) || a > 1.0) throw DomainError("mittag_leffler requires a in (0,1]");
    if (z < 0.0) throw DomainError("mittag_leffler requires z >= 0");
    MittagLefflerResult out;
    if (z == 0.0) {
        out.value = 1.0;
        out.log_value = 0.0;
        return out;
    }
    const double growth = std::pow(z, 1.0 / a);
    if (growth > 30.0) {
        out.asymptotic = true;
        out.log_value = growth - std::log(a);
        if (out.log_value > 709.0) {
            out.overflow = true;
            out.value = kInf;
        } else {
            out.value = std::exp(out.log_value);
        }
        return out;
    }
    const double logz = std::log(z);
    double sum = 1.0;
    for (int n = 1; n <= 20000; ++n) {
        const double term = std::exp(n * logz - log_gamma(1.0 + a * n));
        sum += term;
        if (term < 1e-14 * sum && a * n > 1.0) break;
    }
    out.value = sum;
    out.log_value = std::log(sum);
    return out;
}

double small_ball_log_asymptotic(int d, double eps) {
    if (d < 1) throw DomainError("small_ball_log_asymptotic requires d >= 1");
    if (!(eps > 0.0)) throw DomainError("small_ball_log_asymptotic requires eps > 0");
    const double j = bessel_first_zero(0.5 * (d - 2));
    return -j * j / (2.0 * eps * eps);
}

double unit_ball_volume(int d) {
    if (d < 1) throw DomainError("unit_ball_volume requires d >= 1");
    return std::pow(kPi, 0.5 * d) / gamma_fn(0.5 * d + 1.0);
}

double unit_sphere_area(int d) {
    if (d < 1) throw DomainError("unit_sphere_area requires d >= 1");
    return 2.0 * std::pow(kPi, 0.5 * d) / gamma_fn(0.5 * d);
}

VolumeConstants volume_constants(int d) {
    VolumeConstants vc;
    vc.d = d;
    vc.ball_volume = unit_ball_volume(d);
    vc.sphere_area = unit_sphere_area(d);
    vc.bessel_index = 0.5 * (d - 2);
    vc.bessel_zero = bessel_first_zero(vc.bessel_index);
    return vc;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double log_normal_cdf(double z) {
    if (z > -36.0) {
        return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
    }
    // Mills-ratio asymptotic: Phi(z) ~ phi(z)/|z| (1 - 1/z^2 + 3/z^4 - ...).
    const double w = 1.0 / (z * z);
    const double series = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w)));
    return -0.5 * z * z - 0.5 * std::log(2.0 * kPi) - std::log(-z) + std::log(series);
}

double log_gaussian_interval_mass(double a, double b) {
    if (!(a < b)) return -kInf;
    if (a >= 0.0) return log_gaussian_interval_mass(-b, -a);
    if (b <= 0.0) {
        const double la = log_normal_cdf(a);
        const double lb = log_normal_cdf(b);
        const double d = la - lb;
        return lb + std::log1p(-std::exp(d));
    }
    const double p =
        0.5 * (std::erf(b / std::numbers::sqrt2) - std::erf(a / std::numbers::sqrt2));
    return std::log(p);
}

} // namespace ifl::sf
