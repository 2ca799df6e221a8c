#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ifl/errors.hpp"
#include "ifl/kernels.hpp"
#include "ifl/spectral.hpp"

using namespace ifl;
namespace nb = std::numbers;

namespace {
const double kSqrt2Pi = 2.5066282746310007; // riesz constant at d=1, beta=1/2
}

TEST_CASE("riesz fourier constant in d=1 at beta=1/2 is sqrt(2 pi)") {
    CHECK(riesz_fourier_constant(1, 0.5) == doctest::Approx(kSqrt2Pi).epsilon(1e-13));
    // constant is defined for all 0 < beta < d, not just the covariance range
    CHECK_NOTHROW(riesz_fourier_constant(3, 2.2));
    CHECK_THROWS_AS(riesz_fourier_constant(1, 1.0), DomainError);
    CHECK_THROWS_AS(riesz_fourier_constant(2, 0.0), DomainError);
}

TEST_CASE("riesz spectral tail and bulk match their closed forms") {
    const auto mu = SpectralMeasure::riesz_density(1, 0.5);
    CHECK(mu.beta() == 0.5);
    CHECK(mu.riesz_constant() == doctest::Approx(kSqrt2Pi).epsilon(1e-13));

    // tail(N) = c_beta S_{d-1} N^{beta-2}/(2-beta), bulk(N) = c_beta S_{d-1} N^beta/beta
    CHECK(spectral_tail(mu, 1.0) ==
          doctest::Approx(3.3421710328413341).epsilon(1e-12));
    CHECK(spectral_bulk(mu, 1.0) ==
          doctest::Approx(10.026513098524003).epsilon(1e-12));
    for (double N : {0.5, 2.0, 7.0}) {
        CHECK(spectral_tail(mu, N) ==
              doctest::Approx(3.3421710328413341 * std::pow(N, -1.5)).epsilon(1e-12));
        CHECK(spectral_bulk(mu, N) ==
              doctest::Approx(10.026513098524003 * std::pow(N, 0.5)).epsilon(1e-12));
    }

    // tail decreases, bulk increases
    double prev_tail = spectral_tail(mu, 0.25);
    double prev_bulk = spectral_bulk(mu, 0.25);
    for (double N = 0.5; N < 20.0; N *= 2.0) {
        const double tl = spectral_tail(mu, N);
        const double bk = spectral_bulk(mu, N);
        CHECK(tl < prev_tail);
        CHECK(bk > prev_bulk);
        prev_tail = tl;
        prev_bulk = bk;
    }

    // the quadratically weighted tail diverges at N = 0
    CHECK(std::isinf(spectral_tail(mu, 0.0)));
    CHECK(spectral_bulk(mu, 0.0) == 0.0);
}

TEST_CASE("atomic measures use strict tail and closed bulk boundaries") {
    const auto mu = SpectralMeasure::atomic(
        1, {SpectralAtom{1.0, 2.0}, SpectralAtom{3.0, 5.0}});
    CHECK(spectral_tail(mu, 0.5) == doctest::Approx(2.0 + 5.0 / 9.0).epsilon(1e-15));
    CHECK(spectral_tail(mu, 1.0) == doctest::Approx(5.0 / 9.0).epsilon(1e-15));
    CHECK(spectral_tail(mu, 3.0) == 0.0);
    CHECK(spectral_bulk(mu, 0.5) == 0.0);
    CHECK(spectral_bulk(mu, 1.0) == 2.0);
    CHECK(spectral_bulk(mu, 3.0) == 7.0);
}

TEST_CASE("lebesgue spectrum in d=1") {
    const auto mu = SpectralMeasure::lebesgue_1d();
    CHECK(spectral_tail(mu, 4.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(spectral_bulk(mu, 4.0) == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(dalang_check(mu).value == doctest::Approx(nb::pi).epsilon(1e-10));
    CHECK(dalang_check(mu).finite());
}

TEST_CASE("tabulated radial density clamps and truncates") {
    const auto mu = SpectralMeasure::radial_table(1, {0.0, 2.0}, {1.0, 1.0});
    CHECK(mu.density_at(0.5) == doctest::Approx(1.0));
    CHECK(mu.density_at(1.7) == doctest::Approx(1.0));
    CHECK(mu.density_at(2.5) == 0.0);
    CHECK(mu.radial_cutoff() == 2.0);
    CHECK(spectral_bulk(mu, 1.0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(spectral_bulk(mu, 3.0) == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(spectral_tail(mu, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("threshold frequency matches the closed-form crossing point") {
    const auto mu = SpectralMeasure::riesz_density(1, 0.5);
    // tau = (2 pi)/(32 (p-1) lambda^2 G); with p=2, lambda=1, G=1 the tail
    // c S N^{-3/2}/(3/2) crosses tau at N = (64 G sqrt(2 pi)/(3 pi))^{2/3}.
    const double n1 = frequency_threshold(mu, 2, 1.0, 1.0);
    CHECK(n1 == doctest::Approx(6.6170719029269334).epsilon(1e-8));
    const double n8 = frequency_threshold(mu, 2, 1.0, 8.0);
    CHECK(n8 == doctest::Approx(26.468287611707733).epsilon(1e-8));
    // G -> 8 G multiplies the threshold by 8^{2/3} = 4
    CHECK(n8 == doctest::Approx(4.0 * n1).epsilon(1e-8));

    // defining inequality: closed at the threshold, open just below
    const double tau = 2.0 * nb::pi / 32.0;
    CHECK(spectral_tail(mu, n1) <= tau * (1.0 + 1e-12));
    CHECK(spectral_tail(mu, n1 * (1.0 - 1e-6)) > tau);
}

TEST_CASE("threshold lands on an atomic jump") {
    // single atom at radius 2: tail is 1 below the jump and 0 at it
    const auto mu = SpectralMeasure::atomic(1, {SpectralAtom{2.0, 4.0}});
    CHECK(frequency_threshold(mu, 2, 1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("no finite threshold when the tail never drops") {
    // an atom out at 2e12 keeps the tail at 25 for every N the search visits
    const auto mu = SpectralMeasure::atomic(1, {SpectralAtom{2e12, 1e26}});
    CHECK_THROWS_AS(frequency_threshold(mu, 2, 1.0, 1.0), NoFiniteThreshold);
}

TEST_CASE("theta scale equals threshold times sqrt((2-beta)/beta)") {
    const auto mu = SpectralMeasure::riesz_density(1, 0.5);
    const auto gamma = TimeCovariance::constant(1.0);
    const double n1 = frequency_threshold(mu, 2, 1.0, 1.0);
    const double th1 = theta_scale(mu, gamma, 2, 1.0, 1.0);
    CHECK(th1 == doctest::Approx(n1 * std::sqrt(3.0)).epsilon(1e-10));
    CHECK(th1 == doctest::Approx(11.461104733205923).epsilon(1e-8));

    // theta / G(t)^{1/(2-beta)} is flat across horizons
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
        const double th = theta_scale(mu, gamma, 2, 1.0, t);
        CHECK(th / std::pow(t, 2.0 / 3.0) ==
              doctest::Approx(11.461104733205923).epsilon(1e-8));
    }
}

TEST_CASE("theta is undefined when everything sits below the threshold") {
    const auto mu = SpectralMeasure::atomic(1, {SpectralAtom{1.0, 1.0}});
    const auto gamma = TimeCovariance::constant(1.0);
    CHECK_THROWS_AS(theta_scale(mu, gamma, 2, 1.0, 1.0), ScaleUndefined);
}

TEST_CASE("integrated-covariance scales follow the singularity exponent") {
    const auto gamma = TimeCovariance::constant(1.0);
    const auto lam = SpaceCovariance::riesz(1, 0.5);
    // exponent 1/(2-beta) = 2/3
    CHECK(vartheta_scale(gamma, lam, 8.0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(vartheta_scale(gamma, lam, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(eta_scale(gamma, lam, 8.0, 0.5) ==
          doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-14));

    // no usable exponent: mollified white in d >= 2
    const auto moll2 = SpaceCovariance::mollified_white(2, 0.1);
    CHECK_THROWS_AS(vartheta_scale(gamma, moll2, 1.0), ScaleUndefined);
    // exponent >= 2: strongly singular fractional product in d = 3
    const auto frac = SpaceCovariance::fractional({0.51, 0.51, 0.51});
    CHECK(frac.scale_beta().value() > 2.0);
    CHECK_THROWS_AS(vartheta_scale(gamma, frac, 1.0), ScaleUndefined);
    CHECK_THROWS_AS(eta_scale(gamma, frac, 1.0, 0.5), ScaleUndefined);
}

TEST_CASE("scale bundle agrees with the individual functions") {
    const auto lam = SpaceCovariance::riesz(1, 0.5);
    const auto mu = spectral_measure(lam);
    const auto gamma = TimeCovariance::constant(1.0);
    const auto s = scale_functions(mu, gamma, lam, 2, 1.0, 1.0, 0.5);
    CHECK(s.p == 2);
    CHECK(s.t == 1.0);
    CHECK(s.lambda == 1.0);
    CHECK(s.delta == 0.5);
    CHECK(s.gamma_t == doctest::Approx(1.0));
    CHECK(s.threshold == doctest::Approx(frequency_threshold(mu, 2, 1.0, 1.0)));
    CHECK(s.tail == doctest::Approx(spectral_tail(mu, s.threshold)));
    CHECK(s.bulk == doctest::Approx(spectral_bulk(mu, s.threshold)));
    CHECK(s.theta == doctest::Approx(theta_scale(mu, gamma, 2, 1.0, 1.0)));
    CHECK(s.eta == doctest::Approx(eta_scale(gamma, lam, 1.0, 0.5)));
    CHECK(s.vartheta == doctest::Approx(vartheta_scale(gamma, lam, 1.0)));
}

TEST_CASE("spectral measures derived from covariances") {
    const auto r = spectral_measure(SpaceCovariance::riesz(2, 1.0));
    CHECK(r.kind() == SpectralKind::RieszDensity);
    CHECK(r.beta() == 1.0);

    // fractional maps onto the riesz density with beta = 2d - 2 sum(H)
    const auto f = spectral_measure(SpaceCovariance::fractional({0.75, 0.6}));
    CHECK(f.kind() == SpectralKind::RieszDensity);
    CHECK(f.beta() == doctest::Approx(1.3).epsilon(1e-15));

    // a constant level is a point mass at frequency zero
    const auto c = spectral_measure(SpaceCovariance::constant_level(2, 3.0));
    CHECK(c.kind() == SpectralKind::Atomic);
    REQUIRE(c.atoms().size() == 1);
    CHECK(c.atoms()[0].radius == 0.0);
    CHECK(c.atoms()[0].mass ==
          doctest::Approx(3.0 * std::pow(2 * nb::pi, 2)).epsilon(1e-14));

    CHECK(spectral_measure(SpaceCovariance::white_1d()).kind() ==
          SpectralKind::Lebesgue1D);
    CHECK_THROWS_AS(
        spectral_measure(SpaceCovariance::lower_riesz_envelope(1, 0.5, 1.0, 1.0)),
        DomainError);
}

TEST_CASE("dalang condition: finite below the critical exponent, divergent above") {
    const auto ok = dalang_check(SpectralMeasure::riesz_density(1, 0.5));
    CHECK(ok.finite());
    CHECK(ok.value == doctest::Approx(11.136655993663416).epsilon(1e-9));

    // beta = 2.2 in d = 3 is a legitimate spectral density but fails the test
    const auto bad = dalang_check(SpectralMeasure::riesz_density(3, 2.2));
    CHECK_FALSE(bad.finite());
    CHECK(std::isinf(bad.value));
    CHECK_FALSE(bad.reason.empty());

    const auto atoms = dalang_check(
        SpectralMeasure::atomic(1, {SpectralAtom{1.0, 2.0}, SpectralAtom{3.0, 5.0}}));
    CHECK(atoms.finite());
    CHECK(atoms.value == doctest::Approx(1.5).epsilon(1e-15));
}
