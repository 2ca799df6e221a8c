#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ifl/kernels.hpp"
#include "ifl/model.hpp"

namespace ifl {

// One discrete Brownian path on [0, t]: positions at the cell midpoints
// (k + 1/2) h, h = t/n_steps, plus the endpoint at t. The midpoint grid keeps
// kernel evaluations away from the cell corners where the exact time-kernel
// weights concentrate. Increments are stored in sampling order: a half step
// to h/2, n_steps - 1 full steps between midpoints, and a half step to t.
struct BrownianPath {
    int d = 1;
    double t = 1.0;
    std::size_t n_steps = 0;
    std::vector<double> increments; // (n_steps + 1) * d
    std::vector<double> mid;        // n_steps * d
    std::vector<double> end;        // d

    double mid_time(std::size_t k) const {
        return (static_cast<double>(k) + 0.5) * t / static_cast<double>(n_steps);
    }
};

struct BrownianEnsemble {
    int p = 1;
    int d = 1;
    double t = 1.0;
    std::size_t n_steps = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t replica = 0;
    std::vector<BrownianPath> paths;
};

// p independent d-dimensional paths; the stream is keyed by
// (master_seed, cell, replica) so any replica can be regenerated in isolation
// and results do not depend on scheduling.
BrownianEnsemble sample_paths(int p, int d, double t, std::size_t n_steps,
                              std::uint64_t master_seed, std::uint64_t replica,
                              std::uint64_t cell = 0);

struct PairEnergySpec {
    // Ceiling singular kernels at their value on the one-cell diffusive scale
    // clip_scale * sqrt(h). Disable for prescribed smooth test paths.
    bool clip = true;
    double clip_scale = 1.0;
};

struct PairEnergyResult {
    double value = 0.0;
    std::size_t clip_events = 0;
};

// Double time integral of gamma(s - r) Lambda(B^i_s - B^j_r) by product
// quadrature: exact per-cell integration of gamma against midpoint values of
// Lambda. White-in-time gamma collapses to the diagonal single integral with
// weight 1/2.
PairEnergyResult pair_energy(const BrownianPath& a, const BrownianPath& b,
                             const TimeCovariance& gamma, const SpaceCovariance& lambda,
                             const PairEnergySpec& spec = {});

enum class MomentMode {
    // Exact initial-condition mass times a conditioned path average; the
    // endpoint is drawn from the u0-weighted Gaussian law, so far-field
    // queries stay informative and lambda = 0 is exact with zero variance.
    EndpointConditioned,
    // Plain average of u0-products times the exponential; the textbook form
    // of the estimator (hit-or-miss in the far field).
    Direct,
};

struct McParams {
    std::size_t n_rep = 10000;
    std::size_t n_steps = 256;
    std::uint64_t seed = 1;
    unsigned workers = 0; // 0: IFL_WORKERS env var, then hardware concurrency
    MomentMode mode = MomentMode::EndpointConditioned;
    PairEnergySpec quadrature;
    std::uint64_t stream_cell = 0; // grid-cell tag separating RNG streams
};

struct MomentEstimate {
    int p = 2;
    double t = 1.0;
    double x_radius = 0.0;
    double lambda = 0.0;
    double value = 0.0;            // may under/overflow; log channel is primary
    double stderr_estimate = 0.0;
    double log_value = 0.0;
    double log_stderr = 0.0;       // relative stderr (sigma of the log, delta method)
    std::size_t n_rep = 0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    std::size_t clip_events = 0;
    MomentMode mode = MomentMode::EndpointConditioned;
};

// Monte Carlo estimate of the p-th moment at distance x_radius from the
// origin (the query point sits on the first axis; the model is rotation
// invariant). p = 1 reduces to the deterministic mean field.
MomentEstimate moment_estimate(const ModelParams& model, const TimeCovariance& gamma,
                               const SpaceCovariance& lambda, double t, double x_radius,
                               const McParams& mc);

// Heat-flow average of the initial condition at distance x_radius; log
// version stays finite far outside the support.
double mean_field(const InitialCondition& u0, double t, double x_radius, int d);
double log_mean_field(const InitialCondition& u0, double t, double x_radius, int d);

struct SmallBallEstimate {
    double p_hat = 0.0;
    double stderr_estimate = 0.0;
    std::size_t n_rep = 0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
};

// Fraction of discrete paths on [0,1] whose running maximum norm stays
// within eps. The grid maximum never exceeds the continuous supremum, so the
// discretization bias is one-sided (overestimates the probability).
SmallBallEstimate small_ball_mc(int d, double eps, std::size_t n_steps,
                                std::size_t n_rep, std::uint64_t seed,
                                unsigned workers = 0);

// Fixed-shape tree reduction; bit-stable for a fixed element order and
// independent of thread count. Returns -inf on an empty or all -inf input.
double log_sum_exp_tree(std::span<const double> values);
double pairwise_sum(std::span<const double> values);

// Worker count resolution: IFL_WORKERS env var wins, then the requested
// value, then hardware concurrency.
unsigned resolve_workers(unsigned requested);

} // namespace ifl
