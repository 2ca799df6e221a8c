#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ifl/errors.hpp"

namespace ifl {

// ---------------------------------------------------------------------------
// Temporal covariance gamma.

enum class TimeKernelFamily { PowerLaw, Constant, Dirac };

class TimeCovariance {
public:
    static TimeCovariance power_law(double alpha); // |t|^{-alpha}, 0 < alpha < 1
    static TimeCovariance constant(double level);  // gamma == level > 0
    static TimeCovariance dirac();                 // white in time

    TimeKernelFamily family() const { return family_; }
    double alpha() const;
    double level() const;
    bool is_distribution() const { return family_ == TimeKernelFamily::Dirac; }

    // Pointwise value gamma(t). Dirac raises DistributionEval.
    double operator()(double t) const;

    // int_0^t gamma(s) ds. The Dirac case uses the half-mass convention 1/2
    // for t > 0 (and 0 at t = 0).
    double integrated(double t) const;

    // Limit t -> infinity of the above (+inf for the persistent families).
    double integrated_infinity() const;

private:
    TimeCovariance() = default;
    TimeKernelFamily family_ = TimeKernelFamily::Constant;
    double param_ = 1.0;
};

// ---------------------------------------------------------------------------
// Spatial covariance Lambda.

enum class SpaceKernelFamily {
    Riesz,             // |x|^{-beta}
    Fractional,        // prod_i |x_i|^{2 H_i - 2}
    ConstantLevel,     // constant c > 0
    MollifiedWhite,    // heat kernel p_eps(x)
    White1D,           // delta_0 in d = 1
    LowerRieszEnvelope // c |x|^{-beta} on {|x| <= r}, a lower bound, not p.d.
};

class SpaceCovariance {
public:
    static SpaceCovariance riesz(int d, double beta); // 0 < beta < min(2, d)
    static SpaceCovariance fractional(std::vector<double> hurst); // each in (1/2,1)
    static SpaceCovariance constant_level(int d, double level);
    static SpaceCovariance mollified_white(int d, double eps);
    static SpaceCovariance white_1d();
    static SpaceCovariance lower_riesz_envelope(int d, double beta, double c, double r);

    SpaceKernelFamily family() const { return family_; }
    int dim() const { return d_; }
    bool is_distribution() const { return family_ == SpaceKernelFamily::White1D; }
    bool is_radial() const;
    // Unbounded at the origin.
    bool is_singular() const;

    // Pointwise value; may be +inf at singular points. White1D raises
    // DistributionEval.
    double operator()(std::span<const double> x) const;

    // Radial profile for the radially symmetric families.
    double radial(double r) const;

    // Exponent governing the short-distance singularity and the front growth
    // rate: beta for Riesz/envelope, 2d - 2 sum(H) for the fractional product,
    // 1 for white noise in d = 1 (also for its mollification in d = 1),
    // 0 for a constant level. Empty when no such exponent exists.
    std::optional<double> scale_beta() const;

    double riesz_beta() const;      // Riesz / envelope
    double level() const;           // ConstantLevel
    double mollifier_eps() const;   // MollifiedWhite
    double envelope_constant() const;
    double envelope_radius() const;
    const std::vector<double>& hurst() const;

private:
    SpaceCovariance() = default;
    SpaceKernelFamily family_ = SpaceKernelFamily::ConstantLevel;
    int d_ = 1;
    double beta_ = 0.0;
    double level_ = 1.0;
    double eps_ = 1.0;
    double env_c_ = 1.0;
    double env_r_ = 1.0;
    std::vector<double> hurst_;
};

// ---------------------------------------------------------------------------
// Spectral side.

// Constant in F(|x|^{-beta})(xi) = riesz_fourier_constant(d,beta) |xi|^{beta-d}
// under the convention Lambda(x) = (2pi)^{-d} int e^{i xi.x} mu(d xi).
double riesz_fourier_constant(int d, double beta);

enum class SpectralKind { RieszDensity, Atomic, Lebesgue1D, TabulatedRadial };

struct SpectralAtom {
    double radius = 0.0; // |xi|
    double mass = 0.0;
};

class SpectralMeasure {
public:
    static SpectralMeasure riesz_density(int d, double beta);
    static SpectralMeasure atomic(int d, std::vector<SpectralAtom> atoms);
    static SpectralMeasure lebesgue_1d();
    // Radial density g(r) against Lebesgue measure on R^d.
    static SpectralMeasure radial_density(int d, std::function<double(double)> g);
    // Piecewise-linear radial density from samples; zero beyond the last node.
    static SpectralMeasure radial_table(int d, std::vector<double> r,
                                        std::vector<double> g);

    SpectralKind kind() const { return kind_; }
    int dim() const { return d_; }
    double beta() const;          // RieszDensity only
    double riesz_constant() const;
    const std::vector<SpectralAtom>& atoms() const { return atoms_; }
    double density_at(double r) const; // radial densities only
    // Upper limit for radial quadrature: +inf for callables, table end for
    // tabulated data.
    double radial_cutoff() const;

private:
    SpectralMeasure() = default;
    SpectralKind kind_ = SpectralKind::Lebesgue1D;
    int d_ = 1;
    double beta_ = 0.0;
    double riesz_const_ = 0.0;
    std::vector<SpectralAtom> atoms_;
    std::function<double(double)> density_;
    std::vector<double> table_r_, table_g_;
};

// Fourier data of a spatial covariance. The fractional family enters the
// bounds only through its singularity exponent, so it maps to the Riesz
// density with beta = 2d - 2 sum(H). The lower Riesz envelope is a bound
// rather than a covariance and has no spectral measure (DomainError).
SpectralMeasure spectral_measure(const SpaceCovariance& lambda);

struct DalangResult {
    double value = 0.0;     // +inf when divergent
    std::string reason;     // empty when finite
    bool finite() const { return reason.empty(); }
};

// int mu(d xi) / (1 + |xi|^2); finiteness is the solvability condition.
DalangResult dalang_check(const SpectralMeasure& mu);

} // namespace ifl
