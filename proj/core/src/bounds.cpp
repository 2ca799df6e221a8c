#include "ifl/bounds.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ifl/quadrature.hpp"
#include "ifl/special_functions.hpp"

namespace ifl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
} // namespace

RieszEnvelope riesz_envelope_of(const SpaceCovariance& lambda) {
    RieszEnvelope env;
    switch (lambda.family()) {
        case SpaceKernelFamily::Riesz:
            env.c = 1.0;
            env.r = kInf;
            env.beta = lambda.riesz_beta();
            return env;
        case SpaceKernelFamily::LowerRieszEnvelope:
            env.c = lambda.envelope_constant();
            env.r = lambda.envelope_radius();
            env.beta = lambda.riesz_beta();
            return env;
        case SpaceKernelFamily::Fractional:
            // prod |x_i|^{2H_i-2} >= prod |x|^{2H_i-2} = |x|^{-beta} since every
            // factor has a negative exponent and |x_i| <= |x|.
            env.c = 1.0;
            env.r = kInf;
            env.beta = lambda.riesz_beta();
            return env;
        case SpaceKernelFamily::ConstantLevel:
            env.c = lambda.level();
            env.r = kInf;
            env.beta = 0.0;
            return env;
        default:
            throw NotApplicable(
                "kernel admits no lower riesz envelope (white-noise families have "
                "their own d=1 bounds)");
    }
}

double log_moment_upper_bound(const ModelParams& model, const SpectralMeasure& mu,
                              const TimeCovariance& gamma, double t, double x_radius,
                              double kappa) {
    model.validate();
    if (model.p < 2) throw DomainError("moment upper bound requires p >= 2");
    if (!(t > 0.0)) throw DomainError("moment upper bound requires t > 0");
    if (!(kappa > 0.0)) throw DomainError("moment upper bound requires kappa > 0");
    if (x_radius < 0.0) throw DomainError("moment upper bound requires |x| >= 0");
    if (!model.u0.compact_support())
        throw DomainError("moment upper bound requires compactly supported u0");

    const double p = model.p;
    const double d = model.d;
    const double m = model.u0.support_radius();
    const double gamma_t = gamma.integrated(t);
    const double n_star = frequency_threshold(mu, model.p, model.lambda, gamma_t);
    const double tail = spectral_tail(mu, n_star);
    const double bulk = spectral_bulk(mu, n_star);
    double ratio;
    if (std::isinf(tail)) {
        ratio = 0.0;
    } else if (tail == 0.0) {
        if (bulk > 0.0)
            throw ScaleUndefined("bulk/tail ratio undefined: zero tail, positive bulk");
        ratio = 0.0;
    } else {
        ratio = bulk / tail;
    }

    return 0.5 * p * std::log(2.0) + 0.25 * p * t * ratio -
           0.25 * d * p * std::log(2.0 * kPi * t) -
           x_radius * x_radius * p / (4.0 * t * (kappa + 1.0)) +
           m * m * p / (4.0 * t * kappa) +
           0.5 * p * std::log(sf::unit_ball_volume(model.d)) +
           0.5 * d * p * std::log(m) + p * std::log(model.u0.sup_norm());
}

double lower_front_constant(int d, double beta, double delta, double c_lambda) {
    if (d < 1) throw DomainError("lower front constant requires d >= 1");
    if (!(beta >= 0.0 && beta < 2.0 && beta < static_cast<double>(d)))
        throw DomainError("lower front constant requires 0 <= beta < min(2, d)");
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("lower front constant requires delta in (0,1)");
    if (!(c_lambda > 0.0))
        throw DomainError("lower front constant requires a positive envelope level");

    const double q = 2.0 - beta;
    const double j = sf::bessel_first_zero(0.5 * (d - 2));
    const double bracket = std::pow(0.5 * beta, beta / q) - std::pow(0.5 * beta, 2.0 / q);
    const double c = 2.0 * bracket * std::pow(1.0 - delta, 2.0 / q) * delta *
                     std::pow(j, -2.0 * beta / q) * std::pow(c_lambda, 2.0 / q) *
                     std::sqrt(2.0 * (1.0 - delta));
    return std::sqrt(c);
}

double lower_front_bound(const ModelParams& model, const RieszEnvelope& env,
                         double delta) {
    model.validate();
    if (model.p < 2) throw DomainError("lower front bound requires p >= 2");
    const double q = 2.0 - env.beta;
    return lower_front_constant(model.d, env.beta, delta, env.c) *
           std::pow(model.lambda, 2.0 / q) * std::pow(model.p - 1.0, 1.0 / q);
}

RieszUpperFront riesz_upper_front(int d, double beta, double lambda, int p) {
    if (d < 1) throw DomainError("riesz upper front requires d >= 1");
    if (!(beta > 0.0 && beta < 2.0 && beta < static_cast<double>(d)))
        throw DomainError("riesz upper front requires 0 < beta < min(2, d)");
    if (!(lambda >= 0.0)) throw DomainError("riesz upper front requires lambda >= 0");
    if (p < 2) throw DomainError("riesz upper front requires p >= 2");

    const double q = 2.0 - beta;
    const double g = sf::gamma_fn(0.5 * (d - beta)) * sf::gamma_fn(1.0 - 0.5 * beta) /
                     sf::gamma_fn(0.5 * d);
    RieszUpperFront out;
    out.b_constant = riesz_fourier_constant(d, beta) * sf::gamma_fn(0.5 * beta) *
                     sf::gamma_fn(1.0 - 0.5 * beta) /
                     (std::pow(2.0, d - 2) * std::pow(kPi, 0.5 * d) *
                      sf::gamma_fn(0.5 * d));

    const double displayed_const = 2.0 * kSqrt2 * std::pow(g, 1.0 / q);
    const double via_b = kSqrt2 * std::pow(out.b_constant, 1.0 / q);
    if (std::abs(via_b - displayed_const) > 1e-12 * displayed_const)
        throw IdentityMismatch("riesz upper front: constant forms disagree", via_b,
                               displayed_const);

    out.value = displayed_const * std::pow(p - 1.0, 1.0 / q) *
                std::pow(lambda, 2.0 / q);
    return out;
}

White1DFronts white_1d_fronts(double lambda, int p, double delta) {
    if (!(lambda >= 0.0)) throw DomainError("white fronts require lambda >= 0");
    if (p < 2) throw DomainError("white fronts require p >= 2");
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("white fronts require delta in (0,1)");
    const double drive = (p - 1.0) * lambda * lambda;
    White1DFronts out;
    out.upper = 2.0 * kSqrt2 * drive;
    out.lower = 2.0 * kSqrt2 /
                (std::numbers::e * std::numbers::e * std::pow(kPi, 1.5)) *
                std::pow(1.0 - delta, 1.5) * std::sqrt(delta) * drive;
    return out;
}

double support_radius_restriction(const ModelParams& model, const SpaceCovariance& lambda,
                                  const TimeCovariance& gamma, double delta) {
    model.validate();
    if (model.p < 2) throw DomainError("support restriction requires p >= 2");
    if (!(model.lambda > 0.0))
        throw DomainError("support restriction requires lambda > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("support restriction requires delta in (0,1)");
    const double g_inf = gamma.integrated_infinity();
    if (std::isinf(g_inf))
        throw NotApplicable(
            "integrated time covariance diverges; no support restriction applies");

    const double drive =
        model.lambda * model.lambda * (model.p - 1.0) * (1.0 - delta) * g_inf;
    if (lambda.family() == SpaceKernelFamily::White1D ||
        (lambda.family() == SpaceKernelFamily::MollifiedWhite && lambda.dim() == 1)) {
        return kSqrt2 * std::pow(kPi, 2.5) * std::numbers::e * std::numbers::e /
               (4.0 * drive);
    }
    const RieszEnvelope env = riesz_envelope_of(lambda);
    if (!(env.beta > 0.0))
        throw NotApplicable("support restriction needs a singular envelope (beta > 0)");
    const double j = sf::bessel_first_zero(0.5 * (model.d - 2));
    const double q = 2.0 - env.beta;
    return 2.0 * std::pow(std::pow(2.0, env.beta - 1.0) * j * j /
                              (env.beta * drive * env.c),
                          1.0 / q);
}

MaxLemmaResult max_lemma(double a, double b, double beta) {
    if (!(a > 0.0)) throw DomainError("max_lemma requires A > 0");
    if (!(b > 0.0)) throw DomainError("max_lemma requires B > 0");
    if (!(beta > 0.0 && beta < 2.0)) throw DomainError("max_lemma requires beta in (0,2)");
    const double q = 2.0 - beta;
    MaxLemmaResult out;
    out.argmax = std::pow(2.0 * b / (beta * a), 1.0 / q);
    out.value = (std::pow(0.5 * beta, beta / q) - std::pow(0.5 * beta, 2.0 / q)) *
                std::pow(a, 2.0 / q) * std::pow(b, -beta / q);
    return out;
}

HeatKernelSandwich heat_kernel_sandwich(int d, double t, double m_radius,
                                        double x_radius, double kappa) {
    if (d < 1 || d > 3) throw DomainError("heat kernel sandwich supports d in {1,2,3}");
    if (!(t > 0.0)) throw DomainError("heat kernel sandwich requires t > 0");
    if (!(kappa > 0.0)) throw DomainError("heat kernel sandwich requires kappa > 0");
    if (m_radius < 0.0) throw DomainError("heat kernel sandwich requires M >= 0");
    if (x_radius < 0.0) throw DomainError("heat kernel sandwich requires |x| >= 0");

    HeatKernelSandwich out;
    if (m_radius == 0.0) return out;

    const double x2 = x_radius * x_radius;
    const double m2 = m_radius * m_radius;
    const double omega = sf::unit_ball_volume(d);
    const double norm = std::pow(2.0 * kPi * t, -0.5 * d);
    out.lower = norm * std::exp(-(kappa + 1.0) * x2 / (2.0 * t)) *
                std::exp(-m2 * (1.0 + 1.0 / kappa) / (2.0 * t)) * omega *
                std::pow(m_radius, d);
    out.upper = norm * std::exp(-x2 / (2.0 * t * (kappa + 1.0))) *
                std::exp(m2 / (2.0 * t * kappa)) * omega * std::pow(m_radius, d);

    // Ball mass of the heat kernel centered at distance x_radius, reduced to a
    // 1-d adaptive integral over the first coordinate.
    quad::Options opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-12;
    const double inv_sqrt_t = 1.0 / std::sqrt(t);
    auto slice_mass = [&](double y1) {
        const double width2 = m2 - y1 * y1;
        const double g1 = std::exp(-0.5 * (y1 - x_radius) * (y1 - x_radius) / t) /
                          std::sqrt(2.0 * kPi * t);
        if (d == 1) return g1;
        const double w = std::sqrt(std::max(width2, 0.0));
        if (d == 2) {
            const double inner =
                0.5 * (std::erf(w * inv_sqrt_t / kSqrt2) -
                       std::erf(-w * inv_sqrt_t / kSqrt2));
            return g1 * inner;
        }
        // d == 3: mass of a centered 2-d Gaussian on a disc of radius w.
        const double inner = -std::expm1(-0.5 * w * w / t);
        return g1 * inner;
    };
    const quad::Result r = quad::integrate(slice_mass, -m_radius, m_radius, opt);
    if (!r.converged || r.error > 1e-9)
        throw QuadratureFailure("heat kernel ball mass quadrature misses 1e-9");
    out.integral = r.value;

    const double slack = 1e-9 + 1e-12 * out.upper;
    if (!(out.lower <= out.integral + slack && out.integral <= out.upper + slack))
        throw QuadratureFailure("heat kernel sandwich ordering failed");
    return out;
}

namespace {

// Terms c * exp(-rate * w) * w^power composing an iterated simplex integral.
struct ExpTerm {
    double coeff;
    double rate;
    int power;
};

// Appends int_0^s exp(-q w) w^j dw expressed again as ExpTerms in s.
void integrate_monomial(double c, double q, int j, double horizon,
                        std::vector<ExpTerm>& out) {
    if (q == 0.0) {
        out.push_back({c / (j + 1), 0.0, j + 1});
        return;
    }
    if (std::abs(q) * horizon < 0.5) {
        // Series in q s keeps small rates free of cancellation.
        double fac = 1.0;
        for (int m = 0; m <= 40; ++m) {
            if (m > 0) fac *= -q / m;
            const double coeff = c * fac / (j + m + 1);
            out.push_back({coeff, 0.0, j + m + 1});
            if (std::abs(coeff) * std::pow(horizon, j + m + 1) <
                1e-18 * std::abs(c) * std::pow(horizon, j + 1))
                break;
        }
        return;
    }
    double jfac = 1.0;
    for (int i = 2; i <= j; ++i) jfac *= i;
    const double k = jfac / std::pow(q, j + 1);
    out.push_back({c * k, 0.0, 0});
    double qi = 1.0; // q^i / i!
    for (int i = 0; i <= j; ++i) {
        if (i > 0) qi *= q / i;
        out.push_back({-c * k * qi, q, i});
    }
}

double ordered_simplex_integral(const std::vector<double>& rates, double t) {
    std::vector<ExpTerm> terms = {{1.0, 0.0, 0}};
    for (double a : rates) {
        std::vector<ExpTerm> next;
        for (const ExpTerm& it : terms)
            integrate_monomial(it.coeff, it.rate + a, it.power, t, next);
        terms = std::move(next);
    }
    double v = 0.0;
    for (const ExpTerm& it : terms)
        v += it.coeff * std::exp(-it.rate * t) * std::pow(t, it.power);
    return v;
}

} // namespace

SimplexComparison simplex_moment_comparison(const SpectralMeasure& mu, double N,
                                            double t, int n) {
    if (mu.kind() != SpectralKind::Atomic)
        throw DomainError("simplex comparison requires an atomic spectral measure");
    if (n < 1 || n > 3) throw DomainError("simplex comparison supports n in {1,2,3}");
    if (!(t > 0.0)) throw DomainError("simplex comparison requires t > 0");
    if (N < 0.0) throw DomainError("simplex comparison requires N >= 0");

    const auto& atoms = mu.atoms();
    const std::size_t na = atoms.size();

    SimplexComparison out;
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> rates(static_cast<std::size_t>(n));
    double lhs = 0.0;
    while (true) {
        double mass = 1.0;
        for (int i = 0; i < n; ++i) {
            mass *= atoms[idx[static_cast<std::size_t>(i)]].mass;
            const double r = atoms[idx[static_cast<std::size_t>(i)]].radius;
            rates[static_cast<std::size_t>(i)] = r * r;
        }
        if (mass != 0.0) lhs += mass * ordered_simplex_integral(rates, t);
        int pos = n - 1;
        while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == na) {
            idx[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    out.lhs = lhs;

    const double bulk = spectral_bulk(mu, N);
    const double tail = spectral_tail(mu, N);
    double rhs = 0.0;
    double binom = 1.0;
    double tk = 1.0;  // t^k / k!
    for (int k = 0; k <= n; ++k) {
        if (k > 0) {
            binom = binom * (n - k + 1) / k;
            tk *= t / k;
        }
        rhs += binom * tk * std::pow(bulk, k) * std::pow(tail, n - k);
    }
    out.rhs = rhs;
    out.holds = out.lhs <= out.rhs * (1.0 + 1e-10);
    return out;
}

FrontBoundsReport front_bounds_report(const ModelParams& model,
                                      const TimeCovariance& gamma,
                                      const SpaceCovariance& lambda, double delta) {
    model.validate();
    if (model.p < 2) throw DomainError("front bounds require p >= 2");
    FrontBoundsReport rep;

    try {
        const RieszEnvelope env = riesz_envelope_of(lambda);
        rep.lower_front = lower_front_bound(model, env, delta);
        const double c = lower_front_constant(model.d, env.beta, delta, env.c);
        rep.c_beta_delta = c * c;
    } catch (const NotApplicable& e) {
        rep.notes.emplace_back(std::string("lower_front: ") + e.what());
    } catch (const DomainError& e) {
        rep.notes.emplace_back(std::string("lower_front: ") + e.what());
    }

    if (lambda.family() == SpaceKernelFamily::Riesz) {
        const RieszUpperFront up =
            riesz_upper_front(model.d, lambda.riesz_beta(), model.lambda, model.p);
        rep.riesz_upper = up.value;
        rep.b_constant = up.b_constant;
    }

    if (lambda.family() == SpaceKernelFamily::White1D ||
        (lambda.family() == SpaceKernelFamily::MollifiedWhite && lambda.dim() == 1)) {
        const White1DFronts wf = white_1d_fronts(model.lambda, model.p, delta);
        rep.white_upper = wf.upper;
        rep.white_lower = wf.lower;
    }

    try {
        rep.m_min = support_radius_restriction(model, lambda, gamma, delta);
    } catch (const NotApplicable& e) {
        rep.notes.emplace_back(std::string("m_min: ") + e.what());
    } catch (const DomainError& e) {
        rep.notes.emplace_back(std::string("m_min: ") + e.what());
    }

    return rep;
}

} // namespace ifl
