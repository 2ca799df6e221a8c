#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "ifl/errors.hpp"
#include "ifl/kernels.hpp"
#include "ifl/quadrature.hpp"

using namespace ifl;

TEST_CASE("time kernel constructors validate their parameters") {
    CHECK_THROWS_AS(TimeCovariance::power_law(0.0), DomainError);
    CHECK_THROWS_AS(TimeCovariance::power_law(1.0), DomainError);
    CHECK_THROWS_AS(TimeCovariance::power_law(-0.2), DomainError);
    CHECK_THROWS_AS(TimeCovariance::constant(0.0), DomainError);
    CHECK_THROWS_AS(TimeCovariance::constant(-1.0), DomainError);
    CHECK_NOTHROW(TimeCovariance::power_law(0.5));
    CHECK_NOTHROW(TimeCovariance::dirac());
}

TEST_CASE("time kernels are even in the lag") {
    const auto pl = TimeCovariance::power_law(0.4);
    CHECK(pl(0.7) == pl(-0.7));
    CHECK(pl(2.0) == doctest::Approx(std::pow(2.0, -0.4)).epsilon(1e-15));
    const auto c = TimeCovariance::constant(3.0);
    CHECK(c(5.0) == 3.0);
    CHECK(c(-5.0) == 3.0);
    CHECK(c.level() == 3.0);
}

TEST_CASE("dirac time kernel is a distribution") {
    const auto d = TimeCovariance::dirac();
    CHECK(d.is_distribution());
    CHECK_THROWS_AS(d(0.5), DistributionEval);
    CHECK(d.integrated(0.0) == 0.0);
    CHECK(d.integrated(1.0) == 0.5);
    CHECK(d.integrated(1000.0) == 0.5);
    CHECK(d.integrated_infinity() == 0.5);
}

TEST_CASE("integrated time kernel matches quadrature and is monotone") {
    for (double alpha : {0.3, 0.5, 0.7}) {
        const auto g = TimeCovariance::power_law(alpha);
        for (double t : {0.1, 1.0, 10.0}) {
            const auto q = quad::integrate_power_weight([](double) { return 1.0; },
                                                        -alpha, t);
            CHECK(g.integrated(t) == doctest::Approx(q.value).epsilon(1e-8));
        }
        double prev = 0.0;
        for (double t = 0.0; t <= 4.0; t += 0.25) {
            const double v = g.integrated(t);
            CHECK(v >= prev);
            prev = v;
        }
        CHECK(std::isinf(g.integrated_infinity()));
    }
    const auto c = TimeCovariance::constant(2.0);
    CHECK(c.integrated(3.0) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(std::isinf(c.integrated_infinity()));
    CHECK_THROWS_AS(c.integrated(-1.0), DomainError);
}

TEST_CASE("space kernel constructors validate their parameters") {
    CHECK_THROWS_AS(SpaceCovariance::riesz(1, 0.0), DomainError);
    CHECK_THROWS_AS(SpaceCovariance::riesz(1, 1.0), DomainError);  // beta < d
    CHECK_THROWS_AS(SpaceCovariance::riesz(3, 2.0), DomainError);  // beta < 2
    CHECK_NOTHROW(SpaceCovariance::riesz(3, 1.9));
    CHECK_NOTHROW(SpaceCovariance::riesz(1, 0.99));
    CHECK_THROWS_AS(SpaceCovariance::fractional({}), DomainError);
    CHECK_THROWS_AS(SpaceCovariance::fractional({0.5}), DomainError);
    CHECK_THROWS_AS(SpaceCovariance::fractional({0.7, 1.0}), DomainError);
    CHECK_NOTHROW(SpaceCovariance::fractional({0.6, 0.9}));
    CHECK_THROWS_AS(SpaceCovariance::constant_level(1, 0.0), DomainError);
    CHECK_THROWS_AS(SpaceCovariance::mollified_white(2, -1.0), DomainError);
    CHECK_THROWS_AS(SpaceCovariance::lower_riesz_envelope(1, 0.5, 0.0, 1.0),
                    DomainError);
    CHECK_THROWS_AS(SpaceCovariance::lower_riesz_envelope(1, 0.5, 1.0, 0.0),
                    DomainError);
}

TEST_CASE("riesz kernel is radial and rotation invariant") {
    const auto k = SpaceCovariance::riesz(2, 1.0);
    CHECK(k.is_radial());
    CHECK(k.is_singular());
    const std::array<double, 2> a{3.0, 4.0};
    const std::array<double, 2> b{5.0, 0.0};
    const std::array<double, 2> c{0.0, -5.0};
    CHECK(k(a) == doctest::Approx(k(b)).epsilon(1e-15));
    CHECK(k(b) == doctest::Approx(k(c)).epsilon(1e-15));
    CHECK(k(b) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(k.radial(5.0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(std::isinf(k.radial(0.0)));
}

TEST_CASE("fractional product kernel and its riesz-equivalent exponent") {
    const auto k = SpaceCovariance::fractional({0.75, 0.6});
    const std::array<double, 2> x{2.0, 3.0};
    // |x1|^{2H1-2} |x2|^{2H2-2}
    CHECK(k(x) == doctest::Approx(std::pow(2.0, -0.5) * std::pow(3.0, -0.8))
                      .epsilon(1e-14));
    CHECK_FALSE(k.is_radial());
    CHECK(k.scale_beta().value() ==
          doctest::Approx(2.0 * 2 - 2.0 * (0.75 + 0.6)).epsilon(1e-15));

    // in d = 1 the product kernel *is* a riesz kernel
    const auto f1 = SpaceCovariance::fractional({0.75});
    const auto r1 = SpaceCovariance::riesz(1, 0.5);
    const std::array<double, 1> y{0.37};
    CHECK(f1(y) == doctest::Approx(r1(y)).epsilon(1e-14));
}

TEST_CASE("mollified white kernel equals the heat kernel at its bandwidth") {
    const double eps = 0.3;
    const auto k = SpaceCovariance::mollified_white(2, eps);
    const std::array<double, 2> x{0.1, -0.2};
    const double r2 = 0.01 + 0.04;
    const double want = std::exp(-r2 / (2 * eps)) / (2 * std::numbers::pi * eps);
    CHECK(k(x) == doctest::Approx(want).epsilon(1e-14));
    CHECK_FALSE(k.is_singular());
    CHECK(k.mollifier_eps() == eps);
}

TEST_CASE("white noise in d=1 refuses pointwise evaluation") {
    const auto k = SpaceCovariance::white_1d();
    CHECK(k.is_distribution());
    CHECK(k.dim() == 1);
    const std::array<double, 1> x{0.5};
    CHECK_THROWS_AS(k(x), DistributionEval);
    CHECK(k.scale_beta().value() == 1.0);
}

TEST_CASE("lower envelope is truncated at its radius") {
    const auto k = SpaceCovariance::lower_riesz_envelope(1, 0.5, 2.0, 1.5);
    const std::array<double, 1> in{1.0};
    const std::array<double, 1> out{1.6};
    CHECK(k(in) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(k(out) == 0.0);
    CHECK(std::isinf(k.radial(0.0)));
    CHECK(k.envelope_constant() == 2.0);
    CHECK(k.envelope_radius() == 1.5);
    CHECK(k.riesz_beta() == 0.5);
}

TEST_CASE("singularity exponents per family") {
    CHECK(SpaceCovariance::riesz(3, 1.2).scale_beta().value() == 1.2);
    CHECK(SpaceCovariance::constant_level(2, 4.0).scale_beta().value() == 0.0);
    CHECK(SpaceCovariance::white_1d().scale_beta().value() == 1.0);
    CHECK(SpaceCovariance::mollified_white(1, 0.1).scale_beta().value() == 1.0);
    CHECK_FALSE(SpaceCovariance::mollified_white(2, 0.1).scale_beta().has_value());
    CHECK(SpaceCovariance::lower_riesz_envelope(2, 0.8, 1.0, 1.0)
              .scale_beta()
              .value() == 0.8);
}

TEST_CASE("accessors reject the wrong family") {
    const auto c = SpaceCovariance::constant_level(1, 2.0);
    CHECK(c.level() == 2.0);
    CHECK_THROWS_AS(c.riesz_beta(), DomainError);
    CHECK_THROWS_AS(c.mollifier_eps(), DomainError);
    CHECK_THROWS_AS(c.hurst(), DomainError);
    const auto r = SpaceCovariance::riesz(1, 0.5);
    CHECK_THROWS_AS(r.level(), DomainError);
    CHECK_THROWS_AS(r.envelope_constant(), DomainError);
}
