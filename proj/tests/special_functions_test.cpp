#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ifl/errors.hpp"
#include "ifl/special_functions.hpp"

using namespace ifl;
namespace nb = std::numbers;

TEST_CASE("gamma function reference values") {
    CHECK(sf::gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sf::gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-14));
    CHECK(sf::gamma_fn(0.5) == doctest::Approx(std::sqrt(nb::pi)).epsilon(1e-14));
    // reflection pair: Gamma(1/4) Gamma(3/4) = pi sqrt(2)
    CHECK(sf::gamma_fn(0.25) * sf::gamma_fn(0.75) ==
          doctest::Approx(4.4428829381583661).epsilon(1e-13));
    CHECK(sf::gamma_fn(10.3) == doctest::Approx(716430.68906237523).epsilon(1e-13));
    CHECK_THROWS_AS(sf::gamma_fn(0.0), DomainError);
    CHECK_THROWS_AS(sf::gamma_fn(-1.5), DomainError);
}

TEST_CASE("log gamma agrees with gamma and survives large arguments") {
    for (double x : {0.1, 0.5, 1.0, 2.5, 10.3, 40.0}) {
        CHECK(sf::log_gamma(x) ==
              doctest::Approx(std::log(sf::gamma_fn(x))).epsilon(1e-12));
    }
    CHECK(sf::log_gamma(101.0) == doctest::Approx(363.73937555556347).epsilon(1e-14));
    CHECK_THROWS_AS(sf::log_gamma(0.0), DomainError);
}

TEST_CASE("gamma is log-convex: Gamma(1+x)^2 < Gamma(1+2x)Gamma(1)") {
    for (int i = 1; i <= 100; ++i) {
        const double x = 0.05 * i;
        const double lhs = 2.0 * sf::log_gamma(1.0 + x);
        const double rhs = sf::log_gamma(1.0 + 2.0 * x);
        CHECK(lhs < rhs);
    }
}

TEST_CASE("first bessel zeros at half-integer and integer orders") {
    // nu = -1/2: J ~ cos, first zero pi/2
    CHECK(sf::bessel_first_zero(-0.5) == doctest::Approx(nb::pi / 2).epsilon(1e-11));
    // nu = 1/2: J ~ sin, first zero pi
    CHECK(sf::bessel_first_zero(0.5) == doctest::Approx(nb::pi).epsilon(1e-11));
    CHECK(sf::bessel_first_zero(0.0) ==
          doctest::Approx(2.4048255576957729).epsilon(1e-11));
    CHECK(sf::bessel_first_zero(1.0) ==
          doctest::Approx(3.8317059702075125).epsilon(1e-11));
    CHECK(sf::bessel_first_zero(1.5) ==
          doctest::Approx(4.4934094579090642).epsilon(1e-11));
    CHECK_THROWS_AS(sf::bessel_first_zero(-0.6), DomainError);
}

TEST_CASE("first bessel zero increases with the order") {
    double prev = 0.0;
    for (double nu = -0.5; nu <= 3.0 + 1e-9; nu += 0.125) {
        const double z = sf::bessel_first_zero(nu);
        CHECK(z > prev);
        prev = z;
    }
}

TEST_CASE("scaled bessel function vanishes at the reported zero") {
    for (double nu : {-0.5, 0.0, 0.7, 1.5, 3.0}) {
        const double z = sf::bessel_first_zero(nu);
        CHECK(std::abs(sf::bessel_j_scaled(nu, z)) < 1e-9);
        // regular and positive at the origin: value 1/Gamma(nu+1)
        CHECK(sf::bessel_j_scaled(nu, 0.0) ==
              doctest::Approx(1.0 / sf::gamma_fn(nu + 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("mittag-leffler at a=1 is the exponential") {
    for (double z = 0.0; z <= 5.0 + 1e-9; z += 0.25) {
        const auto r = sf::mittag_leffler(1.0, z);
        CHECK(r.value == doctest::Approx(std::exp(z)).epsilon(1e-10));
        CHECK(r.log_value == doctest::Approx(z).epsilon(1e-10));
        CHECK_FALSE(r.overflow);
    }
}

TEST_CASE("mittag-leffler series and asymptotic regimes meet smoothly") {
    const double a = 0.5;
    // z^{1/a} = z^2 = 30 at the switch point
    const double z_lo = std::sqrt(30.0) * (1.0 - 1e-6);
    const double z_hi = std::sqrt(30.0) * (1.0 + 1e-6);
    const auto lo = sf::mittag_leffler(a, z_lo);
    const auto hi = sf::mittag_leffler(a, z_hi);
    CHECK_FALSE(lo.asymptotic);
    CHECK(hi.asymptotic);
    CHECK(lo.log_value == doctest::Approx(hi.log_value).epsilon(0.02));
    CHECK_THROWS_AS(sf::mittag_leffler(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(sf::mittag_leffler(1.5, 1.0), DomainError);
    CHECK_THROWS_AS(sf::mittag_leffler(0.5, -1.0), DomainError);
}

TEST_CASE("mittag-leffler flags overflow but keeps the log") {
    const auto r = sf::mittag_leffler(0.5, 40.0); // exp(1600)
    CHECK(r.overflow);
    CHECK(std::isinf(r.value));
    CHECK(r.log_value == doctest::Approx(1600.0 + std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("confinement exponent uses the dimension's bessel zero") {
    for (int d : {1, 2, 3}) {
        const double j = sf::bessel_first_zero((d - 2) / 2.0);
        CHECK(sf::small_ball_log_asymptotic(d, 2.0) ==
              doctest::Approx(-j * j / 8.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(sf::small_ball_log_asymptotic(0, 1.0), DomainError);
    CHECK_THROWS_AS(sf::small_ball_log_asymptotic(1, 0.0), DomainError);
}

TEST_CASE("ball volumes and sphere areas") {
    CHECK(sf::unit_ball_volume(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sf::unit_ball_volume(2) == doctest::Approx(nb::pi).epsilon(1e-12));
    CHECK(sf::unit_ball_volume(3) ==
          doctest::Approx(4.1887902047863914).epsilon(1e-12));
    CHECK(sf::unit_sphere_area(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sf::unit_sphere_area(2) == doctest::Approx(2 * nb::pi).epsilon(1e-12));
    CHECK(sf::unit_sphere_area(3) ==
          doctest::Approx(12.566370614359172).epsilon(1e-12));
    for (int d : {1, 2, 3, 5, 8}) {
        CHECK(sf::unit_sphere_area(d) ==
              doctest::Approx(d * sf::unit_ball_volume(d)).epsilon(1e-12));
        const auto vc = sf::volume_constants(d);
        CHECK(vc.d == d);
        CHECK(vc.ball_volume == sf::unit_ball_volume(d));
        CHECK(vc.sphere_area == sf::unit_sphere_area(d));
        CHECK(vc.bessel_index == doctest::Approx((d - 2) / 2.0));
    }
    CHECK_THROWS_AS(sf::unit_ball_volume(0), DomainError);
}

TEST_CASE("normal cdf reference values and symmetry") {
    CHECK(sf::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sf::normal_cdf(1.96) ==
          doctest::Approx(0.97500210485177952).epsilon(1e-14));
    for (double z : {0.3, 1.0, 2.5}) {
        CHECK(sf::normal_cdf(z) + sf::normal_cdf(-z) ==
              doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("log normal cdf stays accurate deep in the left tail") {
    CHECK(sf::log_normal_cdf(-8.0) ==
          doctest::Approx(-35.01343715991455).epsilon(1e-12));
    CHECK(sf::log_normal_cdf(-40.0) ==
          doctest::Approx(-804.60844201375379).epsilon(1e-12));
    CHECK(sf::log_normal_cdf(0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-13));
}

TEST_CASE("gaussian interval mass handles deep-tail windows") {
    // moderate window matches the direct difference
    CHECK(std::exp(sf::log_gaussian_interval_mass(1.0, 3.0)) ==
          doctest::Approx(0.15730535589982697).epsilon(1e-12));
    // far-tail window where Phi(b) - Phi(a) underflows to 0 - 0
    CHECK(sf::log_gaussian_interval_mass(29.0, 31.0) ==
          doctest::Approx(-424.78741990973016).epsilon(1e-12));
    CHECK(sf::log_gaussian_interval_mass(-31.0, -29.0) ==
          doctest::Approx(sf::log_gaussian_interval_mass(29.0, 31.0)).epsilon(1e-13));
    // empty window has zero mass
    CHECK(std::isinf(sf::log_gaussian_interval_mass(2.0, 2.0)));
    CHECK(sf::log_gaussian_interval_mass(2.0, 2.0) < 0.0);
}
