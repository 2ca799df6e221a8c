#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ifl/bounds.hpp"
#include "ifl/feynman_kac.hpp"
#include "ifl/kernels.hpp"
#include "ifl/model.hpp"
#include "ifl/spectral.hpp"

namespace ifl {

// ---------------------------------------------------------------------------
// Time symmetrization

struct TimeDoubleIntegral {
    double value = 0.0;          // verified symmetrized form, 2 int g(u)(t-u) du
    double brute = 0.0;          // direct 2-d quadrature of the square
    double quoted_value = 0.0;   // same integral under the quoted factor 4
    double quoted_rel_gap = 0.0; // |quoted - value| / value
};

// Evaluates int_0^t int_0^t gamma(s - r) ds dr two independent ways and
// asserts agreement to 1e-8 relative (IdentityMismatch otherwise). The
// factor-4 variant is reported alongside, never adopted.
TimeDoubleIntegral time_double_integral(const TimeCovariance& gamma, double t);

// ---------------------------------------------------------------------------
// Normalized log-moment functional

enum class ScaleKind { Theta, Eta, Vartheta };

std::string to_string(ScaleKind kind);

struct FrontFunctional {
    double rho = 0.0;
    double t = 0.0;
    ScaleKind scale_kind = ScaleKind::Vartheta;
    double scale_value = 0.0;
    double x_radius = 0.0; // rho * t * scale_value
    double s_value = 0.0;  // log E-hat u^p / (t scale^2)
    double ci_low = 0.0;
    double ci_high = 0.0;
    double log_moment = 0.0;
    double log_stderr = 0.0;
    std::size_t clip_events = 0;
    bool degenerate = false; // every replica missed the initial support
};

// Scale value for the requested kind at horizon t. Theta derives from the
// spectral threshold; eta/vartheta from the integrated time covariance and
// the kernel's singularity exponent. Throws ScaleUndefined when degenerate.
double front_scale(const TimeCovariance& gamma, const SpaceCovariance& lambda,
                   ScaleKind kind, int p, double coupling, double t, double delta);

// Moment estimate at |x| = rho * t * scale on a fixed axis, reduced to
// S = log E-hat / (t scale^2) with a 95% band from the replica spread. When
// every replica misses the support the result is degenerate: S = -inf with a
// certified one-sided upper band where one exists.
FrontFunctional normalized_log_moment(const ModelParams& model,
                                      const TimeCovariance& gamma,
                                      const SpaceCovariance& lambda, double t,
                                      double rho, ScaleKind kind, const McParams& mc,
                                      double delta = 0.5);

// ---------------------------------------------------------------------------
// Front scan and bracketing

enum class FrontSign { Positive, Negative, Undecided };
enum class FrontTrend { Increasing, Decreasing, Mixed, Flat };

std::string to_string(FrontSign sign);
std::string to_string(FrontTrend trend);

struct FrontScanRow {
    double rho = 0.0;
    FrontSign sign = FrontSign::Undecided;
    FrontTrend trend = FrontTrend::Flat;
    std::vector<FrontFunctional> by_t; // one entry per horizon, grid order
};

struct FrontScan {
    std::vector<double> rho_grid;
    std::vector<double> t_grid;
    ScaleKind scale_kind = ScaleKind::Vartheta;
    double delta = 0.5;
    std::vector<FrontScanRow> rows;
    // Inputs retained so the bracket step can rerun refined points.
    ModelParams model;
    TimeCovariance gamma = TimeCovariance::constant(1.0);
    SpaceCovariance lambda = SpaceCovariance::constant_level(1, 1.0);
    McParams mc;
};

// Evaluates the functional over the (rho, t) product grid. A row is POSITIVE
// when ci_low > 0 at the two largest horizons, NEGATIVE when ci_high < 0
// there, UNDECIDED otherwise. Grid points use disjoint replica streams.
FrontScan front_scan(const ModelParams& model, const TimeCovariance& gamma,
                     const SpaceCovariance& lambda, const std::vector<double>& rho_grid,
                     const std::vector<double>& t_grid, ScaleKind kind,
                     const McParams& mc, double delta = 0.5);

struct FrontBracket {
    double lo = 0.0; // largest rho classified POSITIVE
    double hi = 0.0; // smallest rho classified NEGATIVE
    std::size_t refinements = 0;
    std::vector<FrontFunctional> probes; // refinement evaluations, in order
};

// Sign-change bracket from a scan, optionally tightened by bisection reruns
// at the two largest horizons. NoBracket when the scan has no clean change.
FrontBracket estimate_front_bracket(const FrontScan& scan,
                                    std::size_t refine_rounds = 0);

// ---------------------------------------------------------------------------
// Chaos series bounds

struct ChaosTermBound {
    std::size_t n = 0;
    double term = 0.0;
    double ratio = 0.0; // term_{n+1} / term_n
};

struct ChaosTailBound {
    std::vector<ChaosTermBound> terms;
    double total = 0.0;        // geometric closed form 1/(1 - sqrt(q))
    double base_ratio = 0.0;   // sqrt(q), q = 8 (p-1) lambda^2 G C_N / (2 pi)^d
    double threshold = 0.0;    // frequency threshold N used for C_N
    double log_envelope = 0.0; // log 2 + t bulk / (2 tail): certified moment cap
};

// Geometric majorant of the chaos expansion; the threshold choice forces the
// ratio at or below 1/2 and the series total at or below 2.
ChaosTailBound chaos_tail_bound(const ModelParams& model, const SpectralMeasure& mu,
                                const TimeCovariance& gamma, double t,
                                std::size_t n_terms = 24);

struct RieszChaosBound {
    std::vector<ChaosTermBound> terms;
    double total = 0.0;     // Mittag-Leffler sum of the term sequence
    double log_total = 0.0; // finite even when total overflows
    double series_a = 0.0;  // Mittag-Leffler parameter (2 - beta)/4
    double series_z = 0.0;  // sqrt(B (p-1) lambda^2 G) t^{(2-beta)/4}
    bool asymptotic_regime = false;
    double log_asymptotic = 0.0; // log[(4/(2-beta)) exp(z^{1/a})]
};

// Sharper Riesz-kernel refinement: term_n = z^n / Gamma(a n + 1) with the
// Gamma log-convexity step folded into B.
RieszChaosBound riesz_chaos_bound(const ModelParams& model,
                                  const SpaceCovariance& lambda,
                                  const TimeCovariance& gamma, double t,
                                  std::size_t n_terms = 24);

// Closed form of int e^{-|eta|^2} |eta|^{beta - d} d eta over R^d:
// pi^{d/2} Gamma(beta/2) / Gamma(d/2).
double polar_gaussian_constant(int d, double beta);

// ---------------------------------------------------------------------------
// Bound comparison

enum class BoundVerdict { Consistent, Inconsistent, NotChecked };

std::string to_string(BoundVerdict verdict);

struct BoundComparison {
    std::string name;
    double bound = 0.0;
    BoundVerdict verdict = BoundVerdict::NotChecked;
    std::string note;
};

struct CompareBoundsResult {
    ScaleKind scale_kind = ScaleKind::Vartheta;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double slack = 0.0;
    std::vector<BoundComparison> rows;
};

// Advisory one-sided checks of an empirical bracket against the closed-form
// bounds: upper bounds must not sit below bracket_hi/(1+slack), lower bounds
// not above bracket_hi/(1-slack). Bounds stated in a different scale than the
// scan are reported NotChecked.
CompareBoundsResult compare_bounds(const FrontBracket& bracket,
                                   const FrontBoundsReport& bounds, ScaleKind kind,
                                   double slack = 0.25);

} // namespace ifl
