#include "ifl/kernels.hpp"

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
} // namespace

// ---------------------------------------------------------------------------
// TimeCovariance

TimeCovariance TimeCovariance::power_law(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("time power law requires alpha in (0,1)");
    TimeCovariance g;
    g.family_ = TimeKernelFamily::PowerLaw;
    g.param_ = alpha;
    return g;
}

TimeCovariance TimeCovariance::constant(double level) {
    if (!(level > 0.0)) throw DomainError("constant time kernel requires level > 0");
    TimeCovariance g;
    g.family_ = TimeKernelFamily::Constant;
    g.param_ = level;
    return g;
}

TimeCovariance TimeCovariance::dirac() {
    TimeCovariance g;
    g.family_ = TimeKernelFamily::Dirac;
    g.param_ = 0.0;
    return g;
}

double TimeCovariance::alpha() const {
    if (family_ != TimeKernelFamily::PowerLaw)
        throw DomainError("alpha is only defined for the power-law family");
    return param_;
}

double TimeCovariance::level() const {
    if (family_ != TimeKernelFamily::Constant)
        throw DomainError("level is only defined for the constant family");
    return param_;
}

double TimeCovariance::operator()(double t) const {
    switch (family_) {
        case TimeKernelFamily::PowerLaw:
            if (t == 0.0) return kInf;
            return std::pow(std::abs(t), -param_);
        case TimeKernelFamily::Constant:
            return param_;
        case TimeKernelFamily::Dirac:
            throw DistributionEval("white-in-time kernel has no pointwise values");
    }
    return 0.0;
}

double TimeCovariance::integrated(double t) const {
    if (t < 0.0) throw DomainError("integrated covariance requires t >= 0");
    switch (family_) {
        case TimeKernelFamily::PowerLaw:
            return std::pow(t, 1.0 - param_) / (1.0 - param_);
        case TimeKernelFamily::Constant:
            return param_ * t;
        case TimeKernelFamily::Dirac:
            // Half of the unit mass at 0 lies inside [0, t].
            return t > 0.0 ? 0.5 : 0.0;
    }
    return 0.0;
}

double TimeCovariance::integrated_infinity() const {
    return family_ == TimeKernelFamily::Dirac ? 0.5 : kInf;
}

// ---------------------------------------------------------------------------
// SpaceCovariance

SpaceCovariance SpaceCovariance::riesz(int d, double beta) {
    if (d < 1) throw DomainError("riesz kernel requires d >= 1");
    if (!(beta > 0.0 && beta < 2.0 && beta < static_cast<double>(d)))
        throw DomainError("riesz kernel requires 0 < beta < min(2, d)");
    SpaceCovariance k;
    k.family_ = SpaceKernelFamily::Riesz;
    k.d_ = d;
    k.beta_ = beta;
    return k;
}

SpaceCovariance SpaceCovariance::fractional(std::vector<double> hurst) {
    if (hurst.empty()) throw DomainError("fractional kernel requires d >= 1");
    for (double h : hurst)
        if (!(h > 0.5 && h < 1.0))
            throw DomainError("fractional kernel requires every H in (1/2, 1)");
    SpaceCovariance k;
    k.family_ = SpaceKernelFamily::Fractional;
    k.d_ = static_cast<int>(hurst.size());
    double sum = 0.0;
    for (double h : hurst) sum += h;
    k.beta_ = 2.0 * k.d_ - 2.0 * sum;
    k.hurst_ = std::move(hurst);
    return k;
}

SpaceCovariance SpaceCovariance::constant_level(int d, double level) {
    if (d < 1) throw DomainError("constant kernel requires d >= 1");
    if (!(level > 0.0)) throw DomainError("constant kernel requires level > 0");
    SpaceCovariance k;
    k.family_ = SpaceKernelFamily::ConstantLevel;
    k.d_ = d;
    k.level_ = level;
    k.beta_ = 0.0;
    return k;
}

SpaceCovariance SpaceCovariance::mollified_white(int d, double eps) {
    if (d < 1) throw DomainError("mollified white kernel requires d >= 1");
    if (!(eps > 0.0)) throw DomainError("mollified white kernel requires eps > 0");
    SpaceCovariance k;
    k.family_ = SpaceKernelFamily::MollifiedWhite;
    k.d_ = d;
    k.eps_ = eps;
    return k;
}

SpaceCovariance SpaceCovariance::white_1d() {
    SpaceCovariance k;
    k.family_ = SpaceKernelFamily::White1D;
    k.d_ = 1;
    k.beta_ = 1.0;
    return k;
}

SpaceCovariance SpaceCovariance::lower_riesz_envelope(int d, double beta, double c,
                                                      double r) {
    if (d < 1) throw DomainError("lower riesz envelope requires d >= 1");
    if (!(beta > 0.0 && beta < 2.0 && beta < static_cast<double>(d)))
        throw DomainError("lower riesz envelope requires 0 < beta < min(2, d)");
    if (!(c > 0.0)) throw DomainError("lower riesz envelope requires c > 0");
    if (!(r > 0.0)) throw DomainError("lower riesz envelope requires r > 0");
    SpaceCovariance k;
    k.family_ = SpaceKernelFamily::LowerRieszEnvelope;
    k.d_ = d;
    k.beta_ = beta;
    k.env_c_ = c;
    k.env_r_ = r;
    return k;
}

bool SpaceCovariance::is_radial() const {
    switch (family_) {
        case SpaceKernelFamily::Riesz:
        case SpaceKernelFamily::ConstantLevel:
        case SpaceKernelFamily::MollifiedWhite:
        case SpaceKernelFamily::LowerRieszEnvelope:
            return true;
        case SpaceKernelFamily::Fractional:
            return false;
        case SpaceKernelFamily::White1D:
            return false;
    }
    return false;
}

bool SpaceCovariance::is_singular() const {
    switch (family_) {
        case SpaceKernelFamily::Riesz:
        case SpaceKernelFamily::Fractional:
        case SpaceKernelFamily::LowerRieszEnvelope:
            return true;
        default:
            return false;
    }
}

double SpaceCovariance::operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != d_)
        throw DomainError("space kernel evaluated with wrong dimension");
    switch (family_) {
        case SpaceKernelFamily::Riesz:
        case SpaceKernelFamily::ConstantLevel:
        case SpaceKernelFamily::MollifiedWhite:
        case SpaceKernelFamily::LowerRieszEnvelope: {
            double s = 0.0;
            for (double xi : x) s += xi * xi;
            return radial(std::sqrt(s));
        }
        case SpaceKernelFamily::Fractional: {
            double v = 1.0;
            for (int i = 0; i < d_; ++i) {
                const double a = std::abs(x[i]);
                if (a == 0.0) return kInf;
                v *= std::pow(a, 2.0 * hurst_[i] - 2.0);
            }
            return v;
        }
        case SpaceKernelFamily::White1D:
            throw DistributionEval("white-in-space kernel has no pointwise values");
    }
    return 0.0;
}

double SpaceCovariance::radial(double r) const {
    if (r < 0.0) throw DomainError("radial profile requires r >= 0");
    switch (family_) {
        case SpaceKernelFamily::Riesz:
            return r == 0.0 ? kInf : std::pow(r, -beta_);
        case SpaceKernelFamily::ConstantLevel:
            return level_;
        case SpaceKernelFamily::MollifiedWhite:
            return std::pow(2.0 * kPi * eps_, -0.5 * d_) *
                   std::exp(-0.5 * r * r / eps_);
        case SpaceKernelFamily::LowerRieszEnvelope:
            if (r > env_r_) return 0.0;
            return r == 0.0 ? kInf : env_c_ * std::pow(r, -beta_);
        default:
            throw DomainError("kernel is not radially symmetric");
    }
}

std::optional<double> SpaceCovariance::scale_beta() const {
    switch (family_) {
        case SpaceKernelFamily::Riesz:
        case SpaceKernelFamily::Fractional:
        case SpaceKernelFamily::LowerRieszEnvelope:
            return beta_;
        case SpaceKernelFamily::ConstantLevel:
            return 0.0;
        case SpaceKernelFamily::White1D:
            return 1.0;
        case SpaceKernelFamily::MollifiedWhite:
            if (d_ == 1) return 1.0;
            return std::nullopt;
    }
    return std::nullopt;
}

double SpaceCovariance::riesz_beta() const {
    if (family_ != SpaceKernelFamily::Riesz &&
        family_ != SpaceKernelFamily::LowerRieszEnvelope &&
        family_ != SpaceKernelFamily::Fractional)
        throw DomainError("riesz_beta is not defined for this family");
    return beta_;
}

double SpaceCovariance::level() const {
    if (family_ != SpaceKernelFamily::ConstantLevel)
        throw DomainError("level is only defined for the constant family");
    return level_;
}

double SpaceCovariance::mollifier_eps() const {
    if (family_ != SpaceKernelFamily::MollifiedWhite)
        throw DomainError("mollifier_eps is only defined for the mollified family");
    return eps_;
}

double SpaceCovariance::envelope_constant() const {
    if (family_ != SpaceKernelFamily::LowerRieszEnvelope)
        throw DomainError("envelope_constant requires the envelope family");
    return env_c_;
}

double SpaceCovariance::envelope_radius() const {
    if (family_ != SpaceKernelFamily::LowerRieszEnvelope)
        throw DomainError("envelope_radius requires the envelope family");
    return env_r_;
}

const std::vector<double>& SpaceCovariance::hurst() const {
    if (family_ != SpaceKernelFamily::Fractional)
        throw DomainError("hurst indices require the fractional family");
    return hurst_;
}

// ---------------------------------------------------------------------------
// Spectral measures

double riesz_fourier_constant(int d, double beta) {
    if (d < 1) throw DomainError("riesz_fourier_constant requires d >= 1");
    if (!(beta > 0.0 && beta < static_cast<double>(d)))
        throw DomainError("riesz_fourier_constant requires 0 < beta < d");
    return std::pow(kPi, 0.5 * d) * std::pow(2.0, d - beta) *
           sf::gamma_fn(0.5 * (d - beta)) / sf::gamma_fn(0.5 * beta);
}

SpectralMeasure SpectralMeasure::riesz_density(int d, double beta) {
    SpectralMeasure m;
    m.kind_ = SpectralKind::RieszDensity;
    m.d_ = d;
    m.beta_ = beta;
    m.riesz_const_ = riesz_fourier_constant(d, beta);
    return m;
}

SpectralMeasure SpectralMeasure::atomic(int d, std::vector<SpectralAtom> atoms) {
    if (d < 1) throw DomainError("atomic spectral measure requires d >= 1");
    for (const auto& a : atoms) {
        if (a.radius < 0.0 || !(a.mass >= 0.0))
            throw DomainError("atomic spectral measure requires radius >= 0, mass >= 0");
    }
    SpectralMeasure m;
    m.kind_ = SpectralKind::Atomic;
    m.d_ = d;
    m.atoms_ = std::move(atoms);
    return m;
}

SpectralMeasure SpectralMeasure::lebesgue_1d() {
    SpectralMeasure m;
    m.kind_ = SpectralKind::Lebesgue1D;
    m.d_ = 1;
    return m;
}

SpectralMeasure SpectralMeasure::radial_density(int d, std::function<double(double)> g) {
    if (d < 1) throw DomainError("radial spectral density requires d >= 1");
    if (!g) throw DomainError("radial spectral density requires a density");
    SpectralMeasure m;
    m.kind_ = SpectralKind::TabulatedRadial;
    m.d_ = d;
    m.density_ = std::move(g);
    return m;
}

SpectralMeasure SpectralMeasure::radial_table(int d, std::vector<double> r,
                                              std::vector<double> g) {
    if (d < 1) throw DomainError("radial spectral table requires d >= 1");
    if (r.size() != g.size() || r.size() < 2)
        throw DomainError("radial spectral table requires matching grids, size >= 2");
    if (!std::is_sorted(r.begin(), r.end()))
        throw DomainError("radial spectral table requires increasing radii");
    SpectralMeasure m;
    m.kind_ = SpectralKind::TabulatedRadial;
    m.d_ = d;
    m.table_r_ = std::move(r);
    m.table_g_ = std::move(g);
    return m;
}

double SpectralMeasure::beta() const {
    if (kind_ != SpectralKind::RieszDensity)
        throw DomainError("beta requires a riesz spectral density");
    return beta_;
}

double SpectralMeasure::riesz_constant() const {
    if (kind_ != SpectralKind::RieszDensity)
        throw DomainError("riesz_constant requires a riesz spectral density");
    return riesz_const_;
}

double SpectralMeasure::density_at(double r) const {
    if (kind_ != SpectralKind::TabulatedRadial)
        throw DomainError("density_at requires a radial spectral density");
    if (r < 0.0) throw DomainError("density_at requires r >= 0");
    if (density_) return density_(r);
    if (r <= table_r_.front()) return table_g_.front();
    if (r >= table_r_.back()) return 0.0;
    auto it = std::upper_bound(table_r_.begin(), table_r_.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - table_r_.begin());
    const double w = (r - table_r_[i - 1]) / (table_r_[i] - table_r_[i - 1]);
    return (1.0 - w) * table_g_[i - 1] + w * table_g_[i];
}

double SpectralMeasure::radial_cutoff() const {
    if (kind_ != SpectralKind::TabulatedRadial)
        throw DomainError("radial_cutoff requires a radial spectral density");
    return density_ ? kInf : table_r_.back();
}

SpectralMeasure spectral_measure(const SpaceCovariance& lambda) {
    const int d = lambda.dim();
    switch (lambda.family()) {
        case SpaceKernelFamily::Riesz:
            return SpectralMeasure::riesz_density(d, lambda.riesz_beta());
        case SpaceKernelFamily::Fractional:
            // Spectral data of the product kernel is only consumed through its
            // singularity exponent; represent it by the matching Riesz density.
            return SpectralMeasure::riesz_density(d, lambda.riesz_beta());
        case SpaceKernelFamily::ConstantLevel: {
            std::vector<SpectralAtom> atoms(1);
            atoms[0].radius = 0.0;
            atoms[0].mass = lambda.level() * std::pow(2.0 * kPi, d);
            return SpectralMeasure::atomic(d, std::move(atoms));
        }
        case SpaceKernelFamily::MollifiedWhite: {
            const double eps = lambda.mollifier_eps();
            return SpectralMeasure::radial_density(
                d, [eps](double r) { return std::exp(-0.5 * eps * r * r); });
        }
        case SpaceKernelFamily::White1D:
            return SpectralMeasure::lebesgue_1d();
        case SpaceKernelFamily::LowerRieszEnvelope:
            throw DomainError(
                "the lower riesz envelope is a pointwise bound, not a covariance; "
                "it has no spectral measure");
    }
    throw DomainError("unknown space kernel family");
}

DalangResult dalang_check(const SpectralMeasure& mu) {
    DalangResult out;
    const int d = mu.dim();
    const double area = sf::unit_sphere_area(d);
    switch (mu.kind()) {
        case SpectralKind::RieszDensity: {
            const double beta = mu.beta();
            if (beta >= 2.0) {
                out.value = kInf;
                out.reason = "spectral tail |xi|^{beta-d} integrates like r^{beta-3} "
                             "at infinity; divergent for beta >= 2";
                return out;
            }
            // int_0^inf r^{beta-1}/(1+r^2) dr = pi / (2 sin(pi beta / 2))
            out.value = mu.riesz_constant() * area * kPi /
                        (2.0 * std::sin(0.5 * kPi * beta));
            return out;
        }
        case SpectralKind::Atomic: {
            double s = 0.0;
            for (const auto& a : mu.atoms()) s += a.mass / (1.0 + a.radius * a.radius);
            out.value = s;
            return out;
        }
        case SpectralKind::Lebesgue1D:
            out.value = kPi;
            return out;
        case SpectralKind::TabulatedRadial: {
            const double cutoff = mu.radial_cutoff();
            auto f = [&mu, d](double r) {
                return mu.density_at(r) * std::pow(r, d - 1) / (1.0 + r * r);
            };
            quad::Result res;
            if (std::isinf(cutoff)) {
                const quad::Result head = quad::integrate(f, 0.0, 1.0);
                const quad::Result tail = quad::integrate_to_infinity(f, 1.0);
                res.value = head.value + tail.value;
                res.converged = head.converged && tail.converged;
            } else {
                res = quad::integrate(f, 0.0, cutoff);
            }
            if (!res.converged) {
                out.value = kInf;
                out.reason = "radial quadrature of the spectral density did not "
                             "converge; treating the integral as divergent";
                return out;
            }
            out.value = res.value;
            return out;
        }
    }
    throw DomainError("unknown spectral kind");
}

} // namespace ifl
