#include "ifl/front_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ifl/quadrature.hpp"
#include "ifl/special_functions.hpp"

namespace ifl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
constexpr double kZ95 = 1.959963984540054;

// int_0^t int_0^t gamma(s-r) ds dr in closed form; equals the sum of the
// discrete pair-energy weights, so it also caps a clipped pair energy.
double double_time_mass(const TimeCovariance& gamma, double t) {
    switch (gamma.family()) {
        case TimeKernelFamily::Constant:
            return gamma.level() * t * t;
        case TimeKernelFamily::PowerLaw: {
            const double a = gamma.alpha();
            return 2.0 * std::pow(t, 2.0 - a) / ((1.0 - a) * (2.0 - a));
        }
        case TimeKernelFamily::Dirac:
            return 0.5 * t;
    }
    throw DomainError("unsupported time kernel");
}

} // namespace

// ---------------------------------------------------------------------------
// Time symmetrization

TimeDoubleIntegral time_double_integral(const TimeCovariance& gamma, double t) {
    if (!(t > 0.0)) throw DomainError("time_double_integral requires t > 0");
    if (gamma.is_distribution())
        throw DomainError("time_double_integral requires a locally integrable kernel");

    quad::Options inner_opt;
    inner_opt.abs_tol = 1e-13;
    inner_opt.rel_tol = 1e-11;
    quad::Options outer_opt;
    outer_opt.abs_tol = 1e-12;
    outer_opt.rel_tol = 1e-10;

    TimeDoubleIntegral out;
    // The symmetrized form 2 int g(u)(t-u) du; the power-weight substitution
    // handles the endpoint singularity of power-law kernels exactly, where
    // plain bisection toward u = 0 stalls a little above the tolerance.
    if (gamma.family() == TimeKernelFamily::PowerLaw) {
        out.value = 2.0 * quad::integrate_power_weight(
                              [&](double u) { return t - u; }, -gamma.alpha(), t,
                              outer_opt)
                              .value;
    } else {
        out.value = 2.0 * quad::integrate_or_throw(
                              [&](double u) { return gamma(u) * (t - u); }, 0.0, t,
                              outer_opt);
    }

    // Brute square: the inner integral over s runs in the distance variable
    // v = |s - r|, which parks the kernel's singularity at the origin of each
    // piece where the power-weight substitution removes it. Bisecting toward
    // a singularity at the interior point r instead eventually degenerates the
    // interval onto it.
    auto one_side = [&](double width) {
        if (width <= 0.0) return 0.0;
        if (gamma.family() == TimeKernelFamily::PowerLaw)
            return quad::integrate_power_weight([](double) { return 1.0; },
                                                -gamma.alpha(), width, inner_opt)
                .value;
        return quad::integrate([&](double v) { return gamma(v); }, 0.0, width,
                               inner_opt)
            .value;
    };
    auto inner = [&](double r) { return one_side(r) + one_side(t - r); };
    out.brute = quad::integrate_or_throw(inner, 0.0, t, outer_opt);

    const double scale = std::max(std::abs(out.value), 1e-300);
    if (std::abs(out.brute - out.value) > 1e-8 * scale)
        throw IdentityMismatch("time_double_integral routes disagree", out.brute,
                               out.value);

    out.quoted_value = (kQuotedSymmetrizationFactor / kVerifiedSymmetrizationFactor) *
                       out.value;
    out.quoted_rel_gap = std::abs(out.quoted_value - out.value) / scale;
    return out;
}

// ---------------------------------------------------------------------------
// Normalized log-moment functional

std::string to_string(ScaleKind kind) {
    switch (kind) {
        case ScaleKind::Theta: return "theta";
        case ScaleKind::Eta: return "eta";
        case ScaleKind::Vartheta: return "vartheta";
    }
    return "?";
}

double front_scale(const TimeCovariance& gamma, const SpaceCovariance& lambda,
                   ScaleKind kind, int p, double coupling, double t, double delta) {
    switch (kind) {
        case ScaleKind::Theta: {
            const SpectralMeasure mu = spectral_measure(lambda);
            return theta_scale(mu, gamma, p, coupling, t);
        }
        case ScaleKind::Eta:
            return eta_scale(gamma, lambda, t, delta);
        case ScaleKind::Vartheta:
            return vartheta_scale(gamma, lambda, t);
    }
    throw DomainError("unknown scale kind");
}

namespace {

// Certified log upper bound for a single replica weight of the direct
// estimator: sup(u0)^p times the clip-capped pair-energy exponential. +inf
// when no cap applies.
double log_replica_weight_cap(const ModelParams& model, const TimeCovariance& gamma,
                              const SpaceCovariance& lambda, double t,
                              const McParams& mc) {
    const double n_pairs = 0.5 * model.p * (model.p - 1);
    double per_eval = kInf;
    const double h = t / static_cast<double>(mc.n_steps);
    const double r0 = mc.quadrature.clip_scale * std::sqrt(h);
    switch (lambda.family()) {
        case SpaceKernelFamily::Riesz:
            if (mc.quadrature.clip) per_eval = std::pow(r0, -lambda.riesz_beta());
            break;
        case SpaceKernelFamily::Fractional:
            if (mc.quadrature.clip) per_eval = std::pow(r0, -lambda.riesz_beta());
            break;
        case SpaceKernelFamily::LowerRieszEnvelope:
            if (mc.quadrature.clip)
                per_eval =
                    lambda.envelope_constant() * std::pow(r0, -lambda.riesz_beta());
            break;
        case SpaceKernelFamily::ConstantLevel:
            per_eval = lambda.level();
            break;
        case SpaceKernelFamily::MollifiedWhite:
            per_eval = std::pow(2.0 * kPi * lambda.mollifier_eps(), -0.5 * lambda.dim());
            break;
        case SpaceKernelFamily::White1D:
            break;
    }
    if (per_eval == kInf) return kInf;
    const double energy_cap = per_eval * double_time_mass(gamma, t);
    return model.p * std::log(model.u0.sup_norm()) +
           model.lambda * model.lambda * n_pairs * energy_cap;
}

} // namespace

FrontFunctional normalized_log_moment(const ModelParams& model,
                                      const TimeCovariance& gamma,
                                      const SpaceCovariance& lambda, double t,
                                      double rho, ScaleKind kind, const McParams& mc,
                                      double delta) {
    if (rho < 0.0) throw DomainError("normalized_log_moment requires rho >= 0");
    FrontFunctional out;
    out.rho = rho;
    out.t = t;
    out.scale_kind = kind;
    out.scale_value = front_scale(gamma, lambda, kind, model.p, model.lambda, t, delta);
    if (!(out.scale_value > 0.0) || !std::isfinite(out.scale_value))
        throw ScaleUndefined("front scale is degenerate for this model");
    out.x_radius = rho * t * out.scale_value;
    const double denom = t * out.scale_value * out.scale_value;

    try {
        const MomentEstimate est =
            moment_estimate(model, gamma, lambda, t, out.x_radius, mc);
        out.log_moment = est.log_value;
        out.log_stderr = est.log_stderr;
        out.clip_events = est.clip_events;
        out.s_value = est.log_value / denom;
        const double half = kZ95 * est.log_stderr / denom;
        out.ci_low = out.s_value - half;
        out.ci_high = out.s_value + half;
    } catch (const AllZeroMass&) {
        out.degenerate = true;
        out.log_moment = -kInf;
        out.s_value = -kInf;
        out.ci_low = -kInf;
        if (mc.mode == MomentMode::Direct) {
            // Rule-of-three: 95% upper bound 3/R on the hit rate times the
            // certified per-replica weight cap.
            const double cap = log_replica_weight_cap(model, gamma, lambda, t, mc);
            out.ci_high =
                cap == kInf
                    ? kInf
                    : (std::log(3.0) - std::log(double(mc.n_rep)) + cap) / denom;
        } else {
            // Conditioned mode only degenerates when the mean field underflows
            // the positive double range.
            out.ci_high =
                model.p * std::log(std::numeric_limits<double>::min()) / denom;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Front scan

std::string to_string(FrontSign sign) {
    switch (sign) {
        case FrontSign::Positive: return "POSITIVE";
        case FrontSign::Negative: return "NEGATIVE";
        case FrontSign::Undecided: return "UNDECIDED";
    }
    return "?";
}

std::string to_string(FrontTrend trend) {
    switch (trend) {
        case FrontTrend::Increasing: return "increasing";
        case FrontTrend::Decreasing: return "decreasing";
        case FrontTrend::Mixed: return "mixed";
        case FrontTrend::Flat: return "flat";
    }
    return "?";
}

namespace {

FrontSign classify_row(const std::vector<FrontFunctional>& by_t) {
    const std::size_t n = by_t.size();
    const std::size_t k = std::min<std::size_t>(2, n);
    bool pos = true, neg = true;
    for (std::size_t i = n - k; i < n; ++i) {
        pos = pos && by_t[i].ci_low > 0.0;
        neg = neg && by_t[i].ci_high < 0.0;
    }
    if (pos) return FrontSign::Positive;
    if (neg) return FrontSign::Negative;
    return FrontSign::Undecided;
}

FrontTrend trend_of(const std::vector<FrontFunctional>& by_t) {
    bool up = false, down = false;
    for (std::size_t i = 1; i < by_t.size(); ++i) {
        const double diff = by_t[i].s_value - by_t[i - 1].s_value;
        up = up || diff > 0.0;
        down = down || diff < 0.0;
    }
    if (up && down) return FrontTrend::Mixed;
    if (up) return FrontTrend::Increasing;
    if (down) return FrontTrend::Decreasing;
    return FrontTrend::Flat;
}

void require_increasing(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw DomainError(std::string(name) + " grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw DomainError(std::string(name) + " grid must be strictly increasing");
}

} // namespace

FrontScan front_scan(const ModelParams& model, const TimeCovariance& gamma,
                     const SpaceCovariance& lambda, const std::vector<double>& rho_grid,
                     const std::vector<double>& t_grid, ScaleKind kind,
                     const McParams& mc, double delta) {
    require_increasing(rho_grid, "rho");
    require_increasing(t_grid, "t");
    FrontScan scan;
    scan.rho_grid = rho_grid;
    scan.t_grid = t_grid;
    scan.scale_kind = kind;
    scan.delta = delta;
    scan.model = model;
    scan.gamma = gamma;
    scan.lambda = lambda;
    scan.mc = mc;
    scan.rows.reserve(rho_grid.size());
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        FrontScanRow row;
        row.rho = rho_grid[i];
        row.by_t.reserve(t_grid.size());
        for (std::size_t j = 0; j < t_grid.size(); ++j) {
            McParams mj = mc;
            mj.stream_cell = mc.stream_cell + i * t_grid.size() + j;
            row.by_t.push_back(normalized_log_moment(model, gamma, lambda, t_grid[j],
                                                     row.rho, kind, mj, delta));
        }
        row.sign = classify_row(row.by_t);
        row.trend = trend_of(row.by_t);
        scan.rows.push_back(std::move(row));
    }
    return scan;
}

FrontBracket estimate_front_bracket(const FrontScan& scan, std::size_t refine_rounds) {
    double lo = -kInf, hi = kInf;
    bool any_pos = false, any_neg = false;
    for (const auto& row : scan.rows) {
        if (row.sign == FrontSign::Positive) {
            any_pos = true;
            lo = std::max(lo, row.rho);
        } else if (row.sign == FrontSign::Negative) {
            any_neg = true;
            hi = std::min(hi, row.rho);
        }
    }
    if (!any_pos || !any_neg)
        throw NoBracket("front scan has no sign change to bracket");
    if (!(lo < hi))
        throw NoBracket("front scan signs are interleaved; no clean bracket");

    FrontBracket bracket;
    bracket.lo = lo;
    bracket.hi = hi;

    const std::size_t grid_cells = scan.rho_grid.size() * scan.t_grid.size();
    const std::size_t n_t = scan.t_grid.size();
    const std::size_t probe_ts = std::min<std::size_t>(2, n_t);
    std::size_t probe_cell = scan.mc.stream_cell + grid_cells;
    for (std::size_t round = 0; round < refine_rounds; ++round) {
        const double mid = 0.5 * (bracket.lo + bracket.hi);
        std::vector<FrontFunctional> by_t;
        by_t.reserve(probe_ts);
        for (std::size_t j = n_t - probe_ts; j < n_t; ++j) {
            McParams mj = scan.mc;
            mj.stream_cell = probe_cell++;
            by_t.push_back(normalized_log_moment(scan.model, scan.gamma, scan.lambda,
                                                 scan.t_grid[j], mid, scan.scale_kind,
                                                 mj, scan.delta));
        }
        const FrontSign sign = classify_row(by_t);
        for (auto& f : by_t) bracket.probes.push_back(std::move(f));
        if (sign == FrontSign::Positive) {
            bracket.lo = mid;
        } else if (sign == FrontSign::Negative) {
            bracket.hi = mid;
        } else {
            break; // noise floor reached; keep the certified bracket
        }
        ++bracket.refinements;
    }
    return bracket;
}

// ---------------------------------------------------------------------------
// Chaos series bounds

ChaosTailBound chaos_tail_bound(const ModelParams& model, const SpectralMeasure& mu,
                                const TimeCovariance& gamma, double t,
                                std::size_t n_terms) {
    model.validate();
    if (!(t > 0.0)) throw DomainError("chaos_tail_bound requires t > 0");
    const double g_t = gamma.integrated(t);
    const double n_threshold = frequency_threshold(mu, model.p, model.lambda, g_t);
    const double tail = spectral_tail(mu, n_threshold);
    const double bulk = spectral_bulk(mu, n_threshold);
    if (tail == 0.0 && bulk > 0.0)
        throw ScaleUndefined("spectral tail vanished with positive bulk mass");

    const double twopi_d = std::pow(2.0 * kPi, mu.dim());
    const double q =
        8.0 * (model.p - 1) * model.lambda * model.lambda * g_t * tail / twopi_d;

    ChaosTailBound out;
    out.threshold = n_threshold;
    out.base_ratio = std::sqrt(q);
    out.total = 1.0 / (1.0 - out.base_ratio);
    const double dc = tail > 0.0 ? bulk / tail : 0.0;
    out.log_envelope = std::log(2.0) + 0.5 * t * dc;
    out.terms.reserve(n_terms);
    double term = 1.0;
    for (std::size_t n = 0; n < n_terms; ++n) {
        out.terms.push_back({n, term, out.base_ratio});
        term *= out.base_ratio;
    }
    return out;
}

RieszChaosBound riesz_chaos_bound(const ModelParams& model,
                                  const SpaceCovariance& lambda,
                                  const TimeCovariance& gamma, double t,
                                  std::size_t n_terms) {
    model.validate();
    if (lambda.family() != SpaceKernelFamily::Riesz)
        throw DomainError("riesz_chaos_bound requires a Riesz kernel");
    if (!(t > 0.0)) throw DomainError("riesz_chaos_bound requires t > 0");
    const int d = lambda.dim();
    const double beta = lambda.riesz_beta();
    const double g_t = gamma.integrated(t);
    const double b = riesz_upper_front(d, beta, model.lambda, model.p).b_constant;

    RieszChaosBound out;
    out.series_a = 0.25 * (2.0 - beta);
    out.series_z = std::sqrt(b * (model.p - 1) * model.lambda * model.lambda * g_t) *
                   std::pow(t, 0.25 * (2.0 - beta));
    const sf::MittagLefflerResult ml = sf::mittag_leffler(out.series_a, out.series_z);
    out.total = ml.value;
    out.log_total = ml.log_value;
    out.asymptotic_regime = ml.asymptotic;
    out.log_asymptotic =
        -std::log(out.series_a) + std::pow(out.series_z, 1.0 / out.series_a);

    out.terms.reserve(n_terms);
    const double logz = out.series_z > 0.0 ? std::log(out.series_z) : -kInf;
    for (std::size_t n = 0; n < n_terms; ++n) {
        const double term =
            out.series_z > 0.0
                ? std::exp(double(n) * logz - sf::log_gamma(out.series_a * n + 1.0))
                : (n == 0 ? 1.0 : 0.0);
        const double next =
            out.series_z > 0.0
                ? std::exp(double(n + 1) * logz -
                           sf::log_gamma(out.series_a * (n + 1) + 1.0))
                : 0.0;
        out.terms.push_back({n, term, term > 0.0 ? next / term : 0.0});
    }
    return out;
}

double polar_gaussian_constant(int d, double beta) {
    if (d < 1) throw DomainError("polar_gaussian_constant requires d >= 1");
    if (!(beta > 0.0)) throw DomainError("polar_gaussian_constant requires beta > 0");
    return std::pow(kPi, 0.5 * d) * sf::gamma_fn(0.5 * beta) / sf::gamma_fn(0.5 * d);
}

// ---------------------------------------------------------------------------
// Bound comparison

std::string to_string(BoundVerdict verdict) {
    switch (verdict) {
        case BoundVerdict::Consistent: return "CONSISTENT";
        case BoundVerdict::Inconsistent: return "INCONSISTENT";
        case BoundVerdict::NotChecked: return "NOT_CHECKED";
    }
    return "?";
}

CompareBoundsResult compare_bounds(const FrontBracket& bracket,
                                   const FrontBoundsReport& bounds, ScaleKind kind,
                                   double slack) {
    if (!(slack >= 0.0)) throw DomainError("compare_bounds requires slack >= 0");
    CompareBoundsResult out;
    out.scale_kind = kind;
    out.bracket_lo = bracket.lo;
    out.bracket_hi = bracket.hi;
    out.slack = slack;

    // A zero bracket converts to zero in every scale, so the unit gating
    // below does not apply to it.
    const bool zero_bracket = bracket.lo == 0.0 && bracket.hi == 0.0;

    auto add = [&](const char* name, const std::optional<double>& value, bool is_upper,
                   ScaleKind natural) {
        if (!value) return;
        BoundComparison row;
        row.name = name;
        row.bound = *value;
        if (natural != kind && !zero_bracket) {
            row.verdict = BoundVerdict::NotChecked;
            row.note = "stated in " + to_string(natural) + " units; scan used " +
                       to_string(kind);
        } else if (is_upper) {
            row.verdict = bracket.hi <= *value * (1.0 + slack)
                              ? BoundVerdict::Consistent
                              : BoundVerdict::Inconsistent;
            row.note = "front bracket top vs upper bound";
        } else {
            row.verdict = bracket.hi >= *value * (1.0 - slack)
                              ? BoundVerdict::Consistent
                              : BoundVerdict::Inconsistent;
            row.note = "front bracket top vs lower bound";
        }
        out.rows.push_back(std::move(row));
    };

    add("theta_upper_cap", bounds.theta_upper_cap, true, ScaleKind::Theta);
    add("lower_front", bounds.lower_front, false, ScaleKind::Eta);
    add("riesz_upper", bounds.riesz_upper, true, ScaleKind::Vartheta);
    add("white_upper", bounds.white_upper, true, ScaleKind::Vartheta);
    add("white_lower", bounds.white_lower, false, ScaleKind::Vartheta);
    return out;
}

} // namespace ifl
