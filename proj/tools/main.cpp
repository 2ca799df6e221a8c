#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ifl/config.hpp"
#include "ifl/errors.hpp"
#include "ifl/run.hpp"

namespace {

ifl::ExperimentConfig load_or_default(const std::string& path) {
    if (path.empty()) return ifl::ExperimentConfig{};
    return ifl::load_config(path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"intermittency front laboratory: moment bounds and Monte Carlo "
                 "estimates for the stochastic heat equation"};
    app.require_subcommand(1);
    app.fallthrough();

    unsigned workers = 0;
    app.add_option("--workers", workers,
                   "worker thread count (0 picks hardware concurrency; the "
                   "IFL_WORKERS environment variable overrides this flag)");

    auto* bounds = app.add_subcommand(
        "bounds", "closed-form front bounds and spectral data for a model");
    std::string b_config;
    bounds->add_option("--config", b_config, "experiment config (JSON)")
        ->check(CLI::ExistingFile);

    auto* moment =
        app.add_subcommand("moment", "Monte Carlo moment estimate at one (t, x)");
    std::string m_config;
    int m_p = 2;
    double m_t = 1.0;
    double m_x = 0.0;
    std::uint64_t m_reps = 0;
    std::uint64_t m_steps = 0;
    std::uint64_t m_seed = 0;
    moment->add_option("--config", m_config, "experiment config (JSON)")
        ->check(CLI::ExistingFile);
    auto* m_p_opt = moment->add_option("--p", m_p, "moment order (integer >= 2)");
    auto* m_t_opt = moment->add_option("--t", m_t, "time horizon (default 1)");
    auto* m_x_opt =
        moment->add_option("--x", m_x, "distance from the origin (default 0)");
    auto* m_reps_opt = moment->add_option("--reps", m_reps, "replica count");
    auto* m_steps_opt = moment->add_option("--steps", m_steps, "path steps");
    auto* m_seed_opt = moment->add_option("--seed", m_seed, "master seed");

    auto* front = app.add_subcommand(
        "front", "normalized log-moment scan over a (rho, t) grid");
    std::string f_config;
    double f_rho_min = 0.0;
    double f_rho_max = 0.0;
    std::uint64_t f_rho_steps = 0;
    std::vector<double> f_t_grid;
    std::string f_scale;
    front->add_option("--config", f_config, "experiment config (JSON)")
        ->check(CLI::ExistingFile);
    auto* f_min_opt = front->add_option("--rho-min", f_rho_min, "smallest rho");
    auto* f_max_opt = front->add_option("--rho-max", f_rho_max, "largest rho");
    auto* f_steps_opt =
        front->add_option("--rho-steps", f_rho_steps, "rho grid size");
    auto* f_grid_opt = front
                           ->add_option("--t-grid", f_t_grid,
                                        "increasing time horizons (space or "
                                        "comma separated)")
                           ->delimiter(',');
    auto* f_scale_opt =
        front->add_option("--scale", f_scale, "front scale function")
            ->check(CLI::IsMember({"theta", "eta", "vartheta"}));

    auto* smallball = app.add_subcommand(
        "smallball", "probability that a Brownian path stays inside a ball");
    std::string s_config;
    double s_eps = 0.5;
    std::uint64_t s_reps = 0;
    std::uint64_t s_steps = 0;
    std::uint64_t s_seed = 0;
    smallball->add_option("--config", s_config, "experiment config (JSON)")
        ->check(CLI::ExistingFile);
    smallball->add_option("--eps", s_eps, "ball radius (default 0.5)");
    auto* s_reps_opt = smallball->add_option("--reps", s_reps, "replica count");
    auto* s_steps_opt = smallball->add_option("--steps", s_steps, "grid steps");
    auto* s_seed_opt = smallball->add_option("--seed", s_seed, "master seed");

    auto* selftest = app.add_subcommand(
        "selftest", "run the full oracle suite; nonzero exit on any failure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ifl::kExitOk : ifl::kExitConfig;
    }

    if (bounds->parsed()) {
        return ifl::guarded(
            [&] { ifl::run_bounds(load_or_default(b_config), std::cout); },
            std::cerr);
    }
    if (moment->parsed()) {
        return ifl::guarded(
            [&] {
                ifl::MomentRequest request;
                if (m_p_opt->count() > 0) request.p = m_p;
                if (m_t_opt->count() > 0) request.t = m_t;
                if (m_x_opt->count() > 0) request.x = m_x;
                if (m_reps_opt->count() > 0) request.reps = m_reps;
                if (m_steps_opt->count() > 0) request.steps = m_steps;
                if (m_seed_opt->count() > 0) request.seed = m_seed;
                ifl::run_moment(load_or_default(m_config), request, workers,
                                std::cout);
            },
            std::cerr);
    }
    if (front->parsed()) {
        return ifl::guarded(
            [&] {
                ifl::FrontRequest request;
                if (f_min_opt->count() > 0) request.rho_min = f_rho_min;
                if (f_max_opt->count() > 0) request.rho_max = f_rho_max;
                if (f_steps_opt->count() > 0) request.rho_steps = f_rho_steps;
                if (f_grid_opt->count() > 0) request.t_grid = f_t_grid;
                if (f_scale_opt->count() > 0)
                    request.scale = ifl::parse_scale_kind(f_scale);
                ifl::run_front(load_or_default(f_config), request, workers,
                               std::cout);
            },
            std::cerr);
    }
    if (smallball->parsed()) {
        return ifl::guarded(
            [&] {
                ifl::SmallBallRequest request;
                request.eps = s_eps;
                if (s_reps_opt->count() > 0) request.reps = s_reps;
                if (s_steps_opt->count() > 0) request.steps = s_steps;
                if (s_seed_opt->count() > 0) request.seed = s_seed;
                ifl::run_smallball(load_or_default(s_config), request, workers,
                                   std::cout);
            },
            std::cerr);
    }
    if (selftest->parsed()) {
        int failures = 0;
        const int rc = ifl::guarded(
            [&] { failures = ifl::run_selftest(workers, std::cout); }, std::cerr);
        if (rc != ifl::kExitOk) return ifl::kExitSelftest;
        return failures == 0 ? ifl::kExitOk : ifl::kExitSelftest;
    }
    return ifl::kExitConfig;
}
