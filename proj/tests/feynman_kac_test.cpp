#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ifl/errors.hpp"
#include "ifl/feynman_kac.hpp"
#include "ifl/kernels.hpp"
#include "ifl/model.hpp"

using namespace ifl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic straight-line path x(s) = slope * s in d = 1, sampled on the
// same midpoint grid the sampler uses.
BrownianPath line_path(double slope, double t, std::size_t n) {
    BrownianPath p;
    p.d = 1;
    p.t = t;
    p.n_steps = n;
    const double h = t / static_cast<double>(n);
    p.increments.assign(n + 1, 0.0);
    p.mid.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        p.mid[k] = slope * (static_cast<double>(k) + 0.5) * h;
    p.end.assign(1, slope * t);
    return p;
}

ModelParams base_model() {
    ModelParams m;
    m.d = 1;
    m.lambda = 1.0;
    m.p = 2;
    m.u0 = InitialCondition::indicator_ball(1.0);
    return m;
}

} // namespace

TEST_CASE("sampled ensembles have the documented layout") {
    const auto ens = sample_paths(3, 2, 2.0, 16, 99, 5);
    CHECK(ens.p == 3);
    CHECK(ens.d == 2);
    CHECK(ens.paths.size() == 3);
    for (const auto& path : ens.paths) {
        CHECK(path.increments.size() == 17 * 2);
        CHECK(path.mid.size() == 16 * 2);
        CHECK(path.end.size() == 2);
        CHECK(path.mid_time(0) == doctest::Approx(0.0625).epsilon(1e-15));
        // midpoints are running sums of the increments; the endpoint adds the
        // trailing half step
        for (int j = 0; j < 2; ++j) {
            double run = 0.0;
            for (std::size_t k = 0; k < 16; ++k) {
                run += path.increments[k * 2 + j];
                CHECK(path.mid[k * 2 + j] == run);
            }
            CHECK(path.end[j] == run + path.increments[16 * 2 + j]);
        }
    }
    CHECK_THROWS_AS(sample_paths(0, 1, 1.0, 8, 1, 0), DomainError);
    CHECK_THROWS_AS(sample_paths(1, 0, 1.0, 8, 1, 0), DomainError);
    CHECK_THROWS_AS(sample_paths(1, 1, 0.0, 8, 1, 0), DomainError);
    CHECK_THROWS_AS(sample_paths(1, 1, 1.0, 1, 1, 0), DomainError);
}

TEST_CASE("path sampling is a pure function of its stream coordinates") {
    const auto a = sample_paths(2, 1, 1.0, 32, 7, 11, 3);
    const auto b = sample_paths(2, 1, 1.0, 32, 7, 11, 3);
    CHECK(a.paths[0].increments == b.paths[0].increments);
    CHECK(a.paths[1].mid == b.paths[1].mid);

    const auto c = sample_paths(2, 1, 1.0, 32, 7, 12, 3);
    CHECK(a.paths[0].increments != c.paths[0].increments);
    const auto d = sample_paths(2, 1, 1.0, 32, 8, 11, 3);
    CHECK(a.paths[0].increments != d.paths[0].increments);
}

TEST_CASE("endpoint variance scales like the horizon") {
    const double t = 2.0;
    const int n_rep = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < n_rep; ++r) {
        const auto ens = sample_paths(1, 1, t, 16, 31415, static_cast<std::uint64_t>(r));
        const double e = ens.paths[0].end[0];
        sum += e;
        sum2 += e * e;
    }
    const double mean = sum / n_rep;
    const double var = sum2 / n_rep - mean * mean;
    CHECK(std::abs(mean) < 5.0 * std::sqrt(t / n_rep));
    CHECK(var == doctest::Approx(t).epsilon(0.12));
}

TEST_CASE("pair energy is exact for flat kernels") {
    const auto a = line_path(1.0, 2.0, 32);
    const auto b = line_path(-1.0, 2.0, 32);
    const auto flat = SpaceCovariance::constant_level(1, 3.0);

    // gamma constant c, Lambda constant L: c L t^2
    const auto cc = pair_energy(a, b, TimeCovariance::constant(0.5), flat);
    CHECK(cc.value == doctest::Approx(0.5 * 3.0 * 4.0).epsilon(1e-12));
    CHECK(cc.clip_events == 0);

    // white-in-time collapses to the diagonal with weight 1/2: L t / 2
    const auto dd = pair_energy(a, b, TimeCovariance::dirac(), flat);
    CHECK(dd.value == doctest::Approx(0.5 * 3.0 * 2.0).epsilon(1e-12));
}

TEST_CASE("power-law time weights integrate exactly against flat space") {
    const auto flat = SpaceCovariance::constant_level(1, 1.0);
    struct Case {
        double alpha, t, want;
    };
    // closed form 2 t^{2-alpha} / ((1-alpha)(2-alpha))
    for (const auto& c : {Case{0.5, 1.0, 8.0 / 3.0},
                          Case{0.3, 2.0, 5.4605203116385583},
                          Case{0.7, 1.5, 8.6872841188988881}}) {
        const auto a = line_path(1.0, c.t, 64);
        const auto b = line_path(0.5, c.t, 64);
        const auto g = TimeCovariance::power_law(c.alpha);
        const auto r = pair_energy(a, b, g, flat);
        CHECK(r.value == doctest::Approx(c.want).epsilon(1e-10));
    }
}

TEST_CASE("singular kernel on coincident paths is controlled by the ceiling") {
    const auto zero_a = line_path(0.0, 1.0, 16);
    const auto zero_b = line_path(0.0, 1.0, 16);
    const auto riesz = SpaceCovariance::riesz(1, 0.5);
    const auto g = TimeCovariance::constant(1.0);

    // every cell pair sits at distance 0; the ceiling is (sqrt(h))^{-1/2}
    PairEnergySpec clip;
    const auto r = pair_energy(zero_a, zero_b, g, riesz, clip);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.clip_events == 256);

    PairEnergySpec raw;
    raw.clip = false;
    const auto q = pair_energy(zero_a, zero_b, g, riesz, raw);
    CHECK(std::isinf(q.value));
}

TEST_CASE("riesz energy of straight paths approaches the double integral") {
    const auto g = TimeCovariance::constant(1.0);
    const auto riesz = SpaceCovariance::riesz(1, 0.5);

    // Same line twice: int_0^1 int_0^1 |s-r|^{-1/2} = 8/3. The ceiling flattens
    // the kernel on the band |s-r| < sqrt(h), which removes exactly 2 h^{1/4}
    // of mass to first order; the deficit is one-sided and shrinks as h^{1/4}.
    const auto diag = pair_energy(line_path(1.0, 1.0, 2048),
                                  line_path(1.0, 1.0, 2048), g, riesz);
    const double deficit = 8.0 / 3.0 - diag.value;
    const double first_order = 2.0 * std::pow(1.0 / 2048.0, 0.25);
    CHECK(deficit > 0.0);
    CHECK(deficit / first_order == doctest::Approx(1.0).epsilon(0.02));

    // opposite lines: int int (s+r)^{-1/2} = (4/3)(2 sqrt(2) - 2); only the
    // integrable corner at s = r = 0 resists the midpoint rule, at O(h^{3/2})
    PairEnergySpec raw;
    raw.clip = false;
    const auto opp = pair_energy(line_path(1.0, 1.0, 2048),
                                 line_path(-1.0, 1.0, 2048), g, riesz, raw);
    CHECK(opp.value == doctest::Approx(1.1045694996615869).epsilon(1e-5));

    // halving the step size tightens the diagonal case
    const auto coarse = pair_energy(line_path(1.0, 1.0, 512),
                                    line_path(1.0, 1.0, 512), g, riesz);
    CHECK(std::abs(diag.value - 8.0 / 3.0) < std::abs(coarse.value - 8.0 / 3.0));
}

TEST_CASE("white-in-space kernels refuse pointwise pair energies") {
    const auto a = line_path(1.0, 1.0, 8);
    CHECK_THROWS_AS(pair_energy(a, a, TimeCovariance::constant(1.0),
                                SpaceCovariance::white_1d()),
                    DistributionEval);
}

TEST_CASE("first moment reduces to the deterministic mean field") {
    ModelParams m = base_model();
    m.p = 1;
    McParams mc;
    mc.n_rep = 50;
    mc.n_steps = 8;
    const auto est = moment_estimate(m, TimeCovariance::constant(1.0),
                                     SpaceCovariance::riesz(1, 0.5), 1.0, 0.7, mc);
    CHECK(est.p == 1);
    CHECK(est.n_rep == 0);
    CHECK(est.stderr_estimate == 0.0);
    CHECK(est.value == doctest::Approx(mean_field(m.u0, 1.0, 0.7, 1)).epsilon(1e-13));
    CHECK(est.log_value ==
          doctest::Approx(log_mean_field(m.u0, 1.0, 0.7, 1)).epsilon(1e-13));
}

TEST_CASE("decoupled model is exact with zero variance") {
    ModelParams m = base_model();
    m.lambda = 0.0;
    McParams mc;
    mc.n_rep = 100;
    mc.n_steps = 16;
    mc.seed = 4;
    const auto g = TimeCovariance::constant(1.0);
    const auto k = SpaceCovariance::riesz(1, 0.5);

    const auto at0 = moment_estimate(m, g, k, 1.0, 0.0, mc);
    CHECK(at0.value == doctest::Approx(0.46606494267439225).epsilon(1e-12));
    CHECK(at0.stderr_estimate == 0.0);
    CHECK(at0.log_stderr == 0.0);

    const auto at2 = moment_estimate(m, g, k, 1.0, 2.0, mc);
    CHECK(at2.value == doctest::Approx(0.024744974994771223).epsilon(1e-12));
    CHECK(at2.stderr_estimate == 0.0);
}

TEST_CASE("flat kernels give a deterministic exponential moment") {
    ModelParams m = base_model();
    m.u0 = InitialCondition::constant_one();
    McParams mc;
    mc.n_rep = 64;
    mc.n_steps = 8;
    for (auto mode : {MomentMode::EndpointConditioned, MomentMode::Direct}) {
        mc.mode = mode;
        const auto est = moment_estimate(m, TimeCovariance::constant(1.0),
                                         SpaceCovariance::constant_level(1, 1.0),
                                         1.0, 0.0, mc);
        CHECK(est.value == doctest::Approx(std::numbers::e).epsilon(1e-12));
        CHECK(est.stderr_estimate == 0.0);
        CHECK(est.log_stderr == 0.0);
    }
}

TEST_CASE("moments grow with the coupling under shared randomness") {
    ModelParams weak = base_model();
    weak.lambda = 0.5;
    ModelParams strong = base_model();
    strong.lambda = 1.0;
    McParams mc;
    mc.n_rep = 400;
    mc.n_steps = 32;
    mc.seed = 11;
    const auto g = TimeCovariance::constant(1.0);
    const auto k = SpaceCovariance::riesz(1, 0.5);
    const auto lo = moment_estimate(weak, g, k, 1.0, 0.5, mc);
    const auto hi = moment_estimate(strong, g, k, 1.0, 0.5, mc);
    CHECK(hi.log_value > lo.log_value);
}

TEST_CASE("second moment dominates the squared mean field") {
    ModelParams m = base_model();
    McParams mc;
    mc.n_rep = 4000;
    mc.n_steps = 64;
    mc.seed = 21;
    const auto est = moment_estimate(m, TimeCovariance::constant(1.0),
                                     SpaceCovariance::riesz(1, 0.5), 1.0, 0.0, mc);
    const double mf = mean_field(m.u0, 1.0, 0.0, 1);
    CHECK(est.value >= mf * mf - 3.0 * est.stderr_estimate);
    // with a nonnegative kernel the correlation term can only help
    CHECK(est.value + 3.0 * est.stderr_estimate > mf * mf);
    CHECK(est.stderr_estimate ==
          doctest::Approx(est.value * est.log_stderr).epsilon(1e-12));
}

TEST_CASE("estimator modes agree within their error bars") {
    ModelParams m = base_model();
    McParams mc;
    mc.n_rep = 6000;
    mc.n_steps = 32;
    mc.seed = 5;
    const auto g = TimeCovariance::constant(1.0);
    const auto k = SpaceCovariance::riesz(1, 0.5);

    mc.mode = MomentMode::EndpointConditioned;
    const auto cond = moment_estimate(m, g, k, 1.0, 0.0, mc);
    mc.mode = MomentMode::Direct;
    mc.seed = 6;
    const auto dir = moment_estimate(m, g, k, 1.0, 0.0, mc);

    const double gap = std::abs(cond.value - dir.value);
    const double budget =
        4.0 * (cond.stderr_estimate + dir.stderr_estimate) + 1e-3 * cond.value;
    CHECK(gap < budget);
}

TEST_CASE("identical results regardless of worker count") {
    ModelParams m = base_model();
    McParams mc;
    mc.n_rep = 500;
    mc.n_steps = 16;
    mc.seed = 17;
    const auto g = TimeCovariance::power_law(0.5);
    const auto k = SpaceCovariance::riesz(1, 0.5);

    mc.workers = 1;
    const auto one = moment_estimate(m, g, k, 1.0, 0.3, mc);
    mc.workers = 4;
    const auto four = moment_estimate(m, g, k, 1.0, 0.3, mc);
    CHECK(one.value == four.value);
    CHECK(one.log_value == four.log_value);
    CHECK(one.stderr_estimate == four.stderr_estimate);
    CHECK(one.clip_events == four.clip_events);
}

TEST_CASE("direct far-field sampling reports the dead ensemble") {
    ModelParams m = base_model();
    McParams mc;
    mc.n_rep = 200;
    mc.n_steps = 16;
    mc.mode = MomentMode::Direct;
    try {
        (void)moment_estimate(m, TimeCovariance::constant(1.0),
                              SpaceCovariance::riesz(1, 0.5), 1.0, 30.0, mc);
        FAIL("expected AllZeroMass");
    } catch (const AllZeroMass& e) {
        CHECK(e.n_rep == 200);
        // all replicas missed; the report carries the analytic size of what
        // was missed: p * log mean-field
        CHECK(e.expected_log_mass ==
              doctest::Approx(2.0 * -424.78741990973016).epsilon(1e-10));
    }
}

TEST_CASE("mean field reference values") {
    const auto ind = InitialCondition::indicator_ball(1.0);
    CHECK(mean_field(ind, 1.0, 0.0, 1) ==
          doctest::Approx(0.68268949213708585).epsilon(1e-12));
    CHECK(mean_field(ind, 1.0, 2.0, 1) ==
          doctest::Approx(0.15730535589982697).epsilon(1e-12));
    CHECK(mean_field(ind, 1.0, 0.0, 2) ==
          doctest::Approx(0.39346934028736658).epsilon(1e-10));
    CHECK(mean_field(ind, 1.0, 0.0, 3) ==
          doctest::Approx(0.1987480430987992).epsilon(1e-10));
    CHECK(log_mean_field(ind, 1.0, 30.0, 1) ==
          doctest::Approx(-424.78741990973016).epsilon(1e-12));

    const auto bump = InitialCondition::bump(1.0);
    CHECK(mean_field(bump, 1.0, 0.0, 1) ==
          doctest::Approx(0.44639014315707509).epsilon(1e-9));

    const auto one = InitialCondition::constant_one();
    CHECK(mean_field(one, 1.0, 5.0, 1) == 1.0);
    CHECK(log_mean_field(one, 1.0, 5.0, 1) == 0.0);

    CHECK_THROWS_AS(mean_field(ind, 1.0, 0.0, 4), DomainError);
}

TEST_CASE("confinement probability estimator basics") {
    // a huge tube contains every path
    const auto all = small_ball_mc(1, 10.0, 64, 500, 3);
    CHECK(all.p_hat == 1.0);
    CHECK(all.stderr_estimate == 0.0);

    const auto a = small_ball_mc(1, 1.0, 64, 2000, 3);
    const auto b = small_ball_mc(1, 1.0, 64, 2000, 3);
    CHECK(a.p_hat == b.p_hat);
    CHECK(a.stderr_estimate ==
          doctest::Approx(std::sqrt(a.p_hat * (1.0 - a.p_hat) / 2000.0))
              .epsilon(1e-12));

    // worker split cannot change the integer hit count
    const auto w1 = small_ball_mc(1, 1.0, 64, 2000, 3, 1);
    const auto w3 = small_ball_mc(1, 1.0, 64, 2000, 3, 3);
    CHECK(w1.p_hat == w3.p_hat);

    CHECK_THROWS_AS(small_ball_mc(0, 1.0, 64, 10, 1), DomainError);
    CHECK_THROWS_AS(small_ball_mc(1, 0.0, 64, 10, 1), DomainError);
}

TEST_CASE("grid maximum undershoots the true supremum, less so when refined") {
    // reflection series value of P{sup |B| <= 1} on [0,1]
    const double exact = 0.37077742979952388;
    const std::size_t n_rep = 8000;
    const auto coarse = small_ball_mc(1, 1.0, 16, n_rep, 12);
    const auto mid = small_ball_mc(1, 1.0, 64, n_rep, 12);
    const auto fine = small_ball_mc(1, 1.0, 256, n_rep, 12);
    CHECK(coarse.p_hat > mid.p_hat);
    CHECK(mid.p_hat > fine.p_hat);
    CHECK(fine.p_hat > exact - 3.0 * fine.stderr_estimate);
    // even the fine grid keeps a visible one-sided bias at this resolution
    CHECK(coarse.p_hat > exact);

    // more coordinates to escape with: d = 2 confines less often
    const auto flat2 = small_ball_mc(2, 0.8, 128, 4000, 9);
    const auto flat1 = small_ball_mc(1, 0.8, 128, 4000, 9);
    CHECK(flat2.p_hat < flat1.p_hat);
}

TEST_CASE("tree log-sum-exp edge cases and agreement with the naive form") {
    const std::vector<double> empty;
    CHECK(std::isinf(log_sum_exp_tree(empty)));
    CHECK(log_sum_exp_tree(empty) < 0.0);
    const std::vector<double> dead = {-kInf, -kInf, -kInf};
    CHECK(std::isinf(log_sum_exp_tree(dead)));
    CHECK(log_sum_exp_tree(dead) < 0.0);

    const std::vector<double> spread = {0.0, -800.0};
    CHECK(log_sum_exp_tree(spread) == doctest::Approx(0.0).epsilon(1e-15));

    const std::vector<double> inf_top = {1.0, kInf, -2.0};
    CHECK(std::isinf(log_sum_exp_tree(inf_top)));
    CHECK(log_sum_exp_tree(inf_top) > 0.0);

    std::mt19937 gen(3);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(1 + static_cast<std::size_t>(U(gen) + 6.0));
        for (auto& x : v) x = U(gen);
        double mx = -kInf;
        for (double x : v) mx = std::max(mx, x);
        double s = 0.0;
        for (double x : v) s += std::exp(x - mx);
        CHECK(log_sum_exp_tree(v) == doctest::Approx(mx + std::log(s)).epsilon(1e-13));
    }
}

TEST_CASE("pairwise sum tracks a high-precision reference") {
    std::mt19937 gen(41);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> v(10000);
    long double ref = 0.0L;
    for (auto& x : v) {
        x = U(gen);
        ref += static_cast<long double>(x);
    }
    CHECK(pairwise_sum(v) ==
          doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));

    const std::vector<double> tiny = {1.0, 2.0, 3.0};
    CHECK(pairwise_sum(tiny) == 6.0);
    const std::vector<double> none;
    CHECK(pairwise_sum(none) == 0.0);
}

TEST_CASE("worker resolution prefers the environment override") {
    setenv("IFL_WORKERS", "3", 1);
    CHECK(resolve_workers(8) == 3);
    CHECK(resolve_workers(0) == 3);
    setenv("IFL_WORKERS", "0", 1);
    CHECK(resolve_workers(5) == 5);
    setenv("IFL_WORKERS", "junk", 1);
    CHECK(resolve_workers(5) == 5);
    unsetenv("IFL_WORKERS");
    CHECK(resolve_workers(2) == 2);
    CHECK(resolve_workers(0) >= 1);
}
