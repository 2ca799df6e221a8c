#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ifl/config.hpp"

namespace ifl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSelftest = 3;
inline constexpr int kExitNumerical = 4;

// Flag overrides applied on top of the loaded config.
struct MomentRequest {
    std::optional<int> p;
    std::optional<double> t;
    std::optional<double> x;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> steps;
    std::optional<std::uint64_t> seed;
};

struct FrontRequest {
    std::optional<double> rho_min;
    std::optional<double> rho_max;
    std::optional<std::size_t> rho_steps;
    std::optional<std::vector<double>> t_grid;
    std::optional<ScaleKind> scale;
};

struct SmallBallRequest {
    double eps = 0.5;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> steps;
    std::optional<std::uint64_t> seed;
};

// Each runner computes its result, writes the data files selected by
// config.output.formats plus a manifest into config.output.directory, and
// logs the file list to `out`. Failures propagate as typed exceptions and
// leave no partial files behind.
void run_bounds(const ExperimentConfig& config, std::ostream& out);
void run_moment(ExperimentConfig config, const MomentRequest& request,
                unsigned workers, std::ostream& out);
void run_front(ExperimentConfig config, const FrontRequest& request, unsigned workers,
               std::ostream& out);
void run_smallball(const ExperimentConfig& config, const SmallBallRequest& request,
                   unsigned workers, std::ostream& out);

// Reduced-budget oracle suite: one line per check, returns the number of
// failures (callers map nonzero to the selftest exit code).
int run_selftest(unsigned workers, std::ostream& out);

// Runs `body`, mapping typed failures onto the exit-code contract
// (config errors 2, numerical failures 4) and logging them to `err`.
int guarded(const std::function<void()>& body, std::ostream& err);

} // namespace ifl
