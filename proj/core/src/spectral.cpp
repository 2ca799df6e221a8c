#include "ifl/spectral.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ifl/quadrature.hpp"
#include "ifl/special_functions.hpp"

namespace ifl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBracketCap = 1e12;
} // namespace

double spectral_tail(const SpectralMeasure& mu, double N) {
    if (N < 0.0) throw DomainError("spectral_tail requires N >= 0");
    const int d = mu.dim();
    switch (mu.kind()) {
        case SpectralKind::RieszDensity: {
            const double beta = mu.beta();
            if (beta >= 2.0) return kInf;
            if (N == 0.0) return kInf;
            return mu.riesz_constant() * sf::unit_sphere_area(d) *
                   std::pow(N, beta - 2.0) / (2.0 - beta);
        }
        case SpectralKind::Atomic: {
            double s = 0.0;
            for (const auto& a : mu.atoms())
                if (a.radius > N) s += a.mass / (a.radius * a.radius);
            return s;
        }
        case SpectralKind::Lebesgue1D:
            if (N == 0.0) return kInf;
            return 2.0 / N;
        case SpectralKind::TabulatedRadial: {
            const double area = sf::unit_sphere_area(d);
            const double cutoff = mu.radial_cutoff();
            auto f = [&mu, d](double r) {
                return mu.density_at(r) * std::pow(r, d - 3);
            };
            if (N == 0.0) {
                if (d <= 2) {
                    if (mu.density_at(0.0) > 0.0) return kInf;
                    N = 1e-12;
                } else {
                    // Remove the r^{d-3} weight analytically near 0.
                    auto g = [&mu](double r) { return mu.density_at(r); };
                    const double split = std::isinf(cutoff) ? 1.0 : cutoff;
                    double s = area *
                               quad::integrate_power_weight(g, d - 3.0, split).value;
                    if (std::isinf(cutoff))
                        s += area * quad::integrate_to_infinity(f, split).value;
                    return s;
                }
            }
            if (std::isinf(cutoff)) {
                const double split = N + 1.0;
                return area * (quad::integrate(f, N, split).value +
                               quad::integrate_to_infinity(f, split).value);
            }
            if (N >= cutoff) return 0.0;
            return area * quad::integrate(f, N, cutoff).value;
        }
    }
    throw DomainError("unknown spectral kind");
}

double spectral_bulk(const SpectralMeasure& mu, double N) {
    if (N < 0.0) throw DomainError("spectral_bulk requires N >= 0");
    const int d = mu.dim();
    switch (mu.kind()) {
        case SpectralKind::RieszDensity: {
            const double beta = mu.beta();
            return mu.riesz_constant() * sf::unit_sphere_area(d) *
                   std::pow(N, beta) / beta;
        }
        case SpectralKind::Atomic: {
            double s = 0.0;
            for (const auto& a : mu.atoms())
                if (a.radius <= N) s += a.mass;
            return s;
        }
        case SpectralKind::Lebesgue1D:
            return 2.0 * N;
        case SpectralKind::TabulatedRadial: {
            if (N == 0.0) return 0.0;
            const double hi = std::min(N, mu.radial_cutoff());
            auto f = [&mu, d](double r) {
                return mu.density_at(r) * std::pow(r, d - 1);
            };
            return sf::unit_sphere_area(d) * quad::integrate(f, 0.0, hi).value;
        }
    }
    throw DomainError("unknown spectral kind");
}

double frequency_threshold(const SpectralMeasure& mu, int p, double lambda,
                           double gamma_t) {
    if (p < 2) throw DomainError("frequency_threshold requires p >= 2");
    if (lambda < 0.0) throw DomainError("frequency_threshold requires lambda >= 0");
    if (gamma_t < 0.0) throw DomainError("frequency_threshold requires gamma_t >= 0");

    const double drive = 32.0 * (p - 1) * lambda * lambda * gamma_t;
    if (drive == 0.0) return 0.0;
    const double tau = std::pow(2.0 * std::numbers::pi, mu.dim()) / drive;

    if (spectral_tail(mu, 0.0) <= tau) return 0.0;

    double lo = 0.0;
    double hi = 1.0;
    while (spectral_tail(mu, hi) > tau) {
        lo = hi;
        hi *= 2.0;
        if (hi > kBracketCap)
            throw NoFiniteThreshold(
                "tail condition not met below the bracket cap 1e12");
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(hi, 1e-6); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (spectral_tail(mu, mid) > tau)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

double theta_scale(const SpectralMeasure& mu, const TimeCovariance& gamma, int p,
                   double lambda, double t) {
    const double g = gamma.integrated(t);
    const double N = frequency_threshold(mu, p, lambda, g);
    const double tail = spectral_tail(mu, N);
    const double bulk = spectral_bulk(mu, N);
    if (tail == 0.0) {
        if (bulk == 0.0) return 0.0;
        throw ScaleUndefined(
            "spectral mass sits entirely at low frequency; bulk/tail ratio "
            "is undefined");
    }
    if (std::isinf(tail)) return 0.0;
    return std::sqrt(bulk / tail);
}

namespace {

double scale_exponent_or_throw(const SpaceCovariance& lambda) {
    const auto beta = lambda.scale_beta();
    if (!beta)
        throw ScaleUndefined("space kernel has no singularity exponent to scale by");
    if (*beta >= 2.0)
        throw ScaleUndefined("singularity exponent >= 2 leaves no front scale");
    return *beta;
}

} // namespace

double eta_scale(const TimeCovariance& gamma, const SpaceCovariance& lambda, double t,
                 double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("eta_scale needs delta in (0,1)");
    const double beta = scale_exponent_or_throw(lambda);
    return std::pow(gamma.integrated(t * delta * delta), 1.0 / (2.0 - beta));
}

double vartheta_scale(const TimeCovariance& gamma, const SpaceCovariance& lambda,
                      double t) {
    const double beta = scale_exponent_or_throw(lambda);
    return std::pow(gamma.integrated(t), 1.0 / (2.0 - beta));
}

SpectralScales scale_functions(const SpectralMeasure& mu, const TimeCovariance& gamma,
                               const SpaceCovariance& lambda, int p, double coupling,
                               double t, double delta) {
    SpectralScales s;
    s.p = p;
    s.t = t;
    s.lambda = coupling;
    s.delta = delta;
    s.gamma_t = gamma.integrated(t);
    s.threshold = frequency_threshold(mu, p, coupling, s.gamma_t);
    s.tail = spectral_tail(mu, s.threshold);
    s.bulk = spectral_bulk(mu, s.threshold);
    s.theta = theta_scale(mu, gamma, p, coupling, t);
    s.eta = eta_scale(gamma, lambda, t, delta);
    s.vartheta = vartheta_scale(gamma, lambda, t);
    return s;
}

} // namespace ifl
