#include "ifl/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ifl/bounds.hpp"
#include "ifl/errors.hpp"
#include "ifl/feynman_kac.hpp"
#include "ifl/front_lab.hpp"
#include "ifl/kernels.hpp"
#include "ifl/manifest.hpp"
#include "ifl/model.hpp"
#include "ifl/quadrature.hpp"
#include "ifl/special_functions.hpp"
#include "ifl/spectral.hpp"

namespace ifl {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ordered_json opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

ordered_json config_json(const ExperimentConfig& config) {
    return ordered_json::parse(serialize_config(config));
}

// Collects the data files written by one run so a failure can remove them
// all; the manifest is written separately, after the data files are final.
class OutputSink {
public:
    explicit OutputSink(const OutputConfig& output)
        : dir_(output.directory), formats_(output.formats) {
        std::filesystem::create_directories(dir_);
    }

    bool wants(const std::string& format) const {
        return std::find(formats_.begin(), formats_.end(), format) != formats_.end();
    }

    void write(const std::string& name, const std::string& content) {
        const std::string path = (dir_ / name).string();
        write_file_atomic(path, content);
        written_.push_back(path);
    }

    std::string path_of(const std::string& name) const { return (dir_ / name).string(); }

    const std::vector<std::string>& written() const { return written_; }

    void discard() {
        for (const auto& path : written_) {
            std::error_code ec;
            std::filesystem::remove(path, ec);
        }
        written_.clear();
    }

private:
    std::filesystem::path dir_;
    std::vector<std::string> formats_;
    std::vector<std::string> written_;
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

RunManifest make_manifest(const std::string& subcommand, const ExperimentConfig& config) {
    RunManifest man;
    man.subcommand = subcommand;
    man.config_echo = serialize_config(config);
    man.master_seed = config.mc.seed;
    man.build_id = build_identifier();
    man.started_utc = utc_timestamp();
    return man;
}

void finish_manifest(RunManifest& man, OutputSink& sink, const Stopwatch& watch,
                     std::ostream& out) {
    man.outputs = sink.written();
    man.wall_seconds = watch.seconds();
    const std::string path = sink.path_of("manifest.json");
    write_manifest(man, path);
    for (const auto& p : man.outputs) out << "wrote " << p << '\n';
    out << "wrote " << path << '\n';
}

ordered_json bounds_json(const FrontBoundsReport& report) {
    ordered_json j;
    j["theta_upper_cap"] = report.theta_upper_cap;
    j["lower_front"] = opt_json(report.lower_front);
    j["c_beta_delta"] = opt_json(report.c_beta_delta);
    j["riesz_upper"] = opt_json(report.riesz_upper);
    j["b_constant"] = opt_json(report.b_constant);
    j["white_upper"] = opt_json(report.white_upper);
    j["white_lower"] = opt_json(report.white_lower);
    j["m_min"] = opt_json(report.m_min);
    j["notes"] = report.notes;
    return j;
}

ordered_json dalang_json(const SpaceCovariance& lambda) {
    ordered_json j;
    try {
        const DalangResult res = dalang_check(spectral_measure(lambda));
        j["applicable"] = true;
        j["finite"] = res.finite();
        j["value"] = std::isfinite(res.value) ? ordered_json(res.value) : nullptr;
        j["reason"] = res.reason;
    } catch (const DomainError& e) {
        j["applicable"] = false;
        j["finite"] = nullptr;
        j["value"] = nullptr;
        j["reason"] = e.what();
    }
    return j;
}

ordered_json scales_json(const ExperimentConfig& config) {
    ordered_json rows = ordered_json::array();
    for (double t : config.front.t_grid) {
        ordered_json row;
        row["t"] = t;
        try {
            const SpectralScales s =
                scale_functions(spectral_measure(config.lambda_kernel), config.gamma,
                                config.lambda_kernel, config.model.p,
                                config.model.lambda, t, config.front.delta);
            row["gamma_t"] = s.gamma_t;
            row["threshold"] = s.threshold;
            row["tail"] = std::isfinite(s.tail) ? ordered_json(s.tail) : nullptr;
            row["bulk"] = s.bulk;
            row["theta"] = s.theta;
            row["eta"] = s.eta;
            row["vartheta"] = s.vartheta;
        } catch (const Error& e) {
            row["error"] = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace

void run_bounds(const ExperimentConfig& config, std::ostream& out) {
    const Stopwatch watch;
    const FrontBoundsReport report = front_bounds_report(
        config.model, config.gamma, config.lambda_kernel, config.front.delta);

    ordered_json doc;
    doc["bounds"] = bounds_json(report);
    doc["dalang"] = dalang_json(config.lambda_kernel);
    doc["scales"] = scales_json(config);
    ordered_json sym;
    sym["verified_factor"] = kVerifiedSymmetrizationFactor;
    sym["quoted_factor"] = kQuotedSymmetrizationFactor;
    sym["note"] = "all computations use the verified factor; the quoted variant is "
                  "reported for comparison only";
    doc["time_symmetrization"] = sym;
    doc["config"] = config_json(config);

    OutputSink sink(config.output);
    try {
        // The bounds report is a JSON document by nature; it is written
        // regardless of the tabular format selection.
        sink.write("bounds.json", doc.dump(2) + "\n");
        RunManifest man = make_manifest("bounds", config);
        finish_manifest(man, sink, watch, out);
    } catch (...) {
        sink.discard();
        throw;
    }

    auto line = [&](const char* name, const std::optional<double>& v) {
        if (v) out << name << " = " << fmt17(*v) << '\n';
    };
    out << "theta_upper_cap = " << fmt17(report.theta_upper_cap) << '\n';
    line("lower_front", report.lower_front);
    line("riesz_upper", report.riesz_upper);
    line("white_upper", report.white_upper);
    line("white_lower", report.white_lower);
    line("m_min", report.m_min);
    for (const auto& note : report.notes) out << "note: " << note << '\n';
}

void run_moment(ExperimentConfig config, const MomentRequest& request, unsigned workers,
                std::ostream& out) {
    if (request.p) {
        if (*request.p < 2) throw ConfigError("moment --p must be an integer >= 2");
        config.model.p = *request.p;
    }
    double t = 1.0;
    if (request.t) {
        if (!(*request.t > 0.0)) throw ConfigError("moment --t must be > 0");
        t = *request.t;
    }
    double x = 0.0;
    if (request.x) {
        if (!(*request.x >= 0.0)) throw ConfigError("moment --x must be >= 0");
        x = *request.x;
    }
    if (request.reps) {
        if (*request.reps < 2) throw ConfigError("moment --reps must be >= 2");
        config.mc.n_rep = *request.reps;
    }
    if (request.steps) {
        if (*request.steps < 2) throw ConfigError("moment --steps must be >= 2");
        config.mc.n_steps = *request.steps;
    }
    if (request.seed) config.mc.seed = *request.seed;
    config.mc.workers = workers;
    config.validate_for_estimation();

    const Stopwatch watch;
    const MomentEstimate est = moment_estimate(config.model, config.gamma,
                                               config.lambda_kernel, t, x, config.mc);

    out << "moment p=" << est.p << " t=" << fmt17(est.t) << " x=" << fmt17(est.x_radius)
        << ": value " << fmt17(est.value) << " (stderr " << fmt17(est.stderr_estimate)
        << ", log " << fmt17(est.log_value) << ", clip " << est.clip_events << ")\n";

    OutputSink sink(config.output);
    try {
        if (sink.wants("csv")) {
            std::string csv =
                "t,x_radius,p,lambda,value,stderr,log_value,n_rep,n_steps,seed,"
                "clip_events\n";
            csv += fmt17(est.t) + "," + fmt17(est.x_radius) + "," +
                   std::to_string(est.p) + "," + fmt17(est.lambda) + "," +
                   fmt17(est.value) + "," + fmt17(est.stderr_estimate) + "," +
                   fmt17(est.log_value) + "," + std::to_string(est.n_rep) + "," +
                   std::to_string(est.n_steps) + "," + std::to_string(est.seed) + "," +
                   std::to_string(est.clip_events) + "\n";
            sink.write("moment.csv", csv);
        }
        if (sink.wants("json")) {
            ordered_json j;
            j["t"] = est.t;
            j["x_radius"] = est.x_radius;
            j["p"] = est.p;
            j["lambda"] = est.lambda;
            j["value"] = std::isfinite(est.value) ? ordered_json(est.value) : nullptr;
            j["stderr"] = est.stderr_estimate;
            j["log_value"] =
                std::isfinite(est.log_value) ? ordered_json(est.log_value) : nullptr;
            j["log_stderr"] = est.log_stderr;
            j["n_rep"] = est.n_rep;
            j["n_steps"] = est.n_steps;
            j["seed"] = est.seed;
            j["clip_events"] = est.clip_events;
            j["mode"] = config.mc.mode == MomentMode::EndpointConditioned
                            ? "conditioned"
                            : "direct";
            j["config"] = config_json(config);
            sink.write("moment.json", j.dump(2) + "\n");
        }
        RunManifest man = make_manifest("moment", config);
        man.clip_events = est.clip_events;
        man.flags.push_back("request: t=" + fmt17(t) + " x=" + fmt17(x));
        finish_manifest(man, sink, watch, out);
    } catch (...) {
        sink.discard();
        throw;
    }
}

void run_front(ExperimentConfig config, const FrontRequest& request, unsigned workers,
               std::ostream& out) {
    if (request.rho_min) {
        if (!(*request.rho_min >= 0.0)) throw ConfigError("front --rho-min must be >= 0");
        config.front.rho_min = *request.rho_min;
    }
    if (request.rho_max) config.front.rho_max = *request.rho_max;
    if (request.rho_steps) {
        if (*request.rho_steps < 1) throw ConfigError("front --rho-steps must be >= 1");
        config.front.rho_steps = *request.rho_steps;
    }
    if (config.front.rho_steps > 1 && !(config.front.rho_max > config.front.rho_min))
        throw ConfigError("front requires rho_max > rho_min");
    if (request.t_grid) {
        const auto& grid = *request.t_grid;
        if (grid.empty()) throw ConfigError("front --t-grid must be non-empty");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!(grid[i] > 0.0))
                throw ConfigError("front --t-grid entries must be > 0");
            if (i > 0 && !(grid[i] > grid[i - 1]))
                throw ConfigError("front --t-grid must be strictly increasing");
        }
        config.front.t_grid = grid;
    }
    if (request.scale) config.front.scale = *request.scale;
    config.mc.workers = workers;
    config.validate_for_estimation();

    const Stopwatch watch;
    const std::vector<double> rhos = rho_grid(config.front);
    const FrontScan scan =
        front_scan(config.model, config.gamma, config.lambda_kernel, rhos,
                   config.front.t_grid, config.front.scale, config.mc,
                   config.front.delta);

    std::vector<std::string> flags;
    std::optional<FrontBracket> bracket;
    std::string bracket_note;
    try {
        bracket = estimate_front_bracket(scan, 2);
    } catch (const NoBracket& e) {
        if (config.model.lambda == 0.0) {
            // Without noise every rho > 0 decays; the front sits at zero.
            bracket = FrontBracket{0.0, 0.0, 0, {}};
            bracket_note = "lambda = 0: no growth at any rho > 0; bracket pinned at zero";
        } else {
            bracket_note = e.what();
        }
        flags.push_back(bracket_note);
    }

    const FrontBoundsReport bounds = front_bounds_report(
        config.model, config.gamma, config.lambda_kernel, config.front.delta);
    std::optional<CompareBoundsResult> comparison;
    if (bracket) comparison = compare_bounds(*bracket, bounds, config.front.scale);

    std::uint64_t clip_total = 0;
    std::size_t degenerate = 0;
    for (const auto& row : scan.rows) {
        for (const auto& f : row.by_t) {
            clip_total += f.clip_events;
            if (f.degenerate) ++degenerate;
        }
    }
    if (bracket) {
        for (const auto& f : bracket->probes) {
            clip_total += f.clip_events;
            if (f.degenerate) ++degenerate;
        }
    }
    if (degenerate > 0)
        flags.push_back(std::to_string(degenerate) +
                        " grid point(s) had every replica miss the initial support");

    for (const auto& row : scan.rows)
        out << "rho=" << fmt17(row.rho) << " sign=" << to_string(row.sign)
            << " trend=" << to_string(row.trend) << '\n';
    if (bracket)
        out << "bracket [" << fmt17(bracket->lo) << ", " << fmt17(bracket->hi)
            << "] after " << bracket->refinements << " refinement(s)\n";
    if (!bracket_note.empty()) out << "note: " << bracket_note << '\n';
    if (comparison)
        for (const auto& row : comparison->rows)
            out << "bound " << row.name << " = " << fmt17(row.bound) << ": "
                << to_string(row.verdict) << '\n';

    OutputSink sink(config.output);
    try {
        if (sink.wants("csv")) {
            std::string csv =
                "rho,t,scale,scale_value,x_radius,s_value,ci_low,ci_high,log_moment,"
                "log_stderr,clip_events,sign,trend\n";
            for (const auto& row : scan.rows) {
                for (const auto& f : row.by_t) {
                    csv += fmt17(f.rho) + "," + fmt17(f.t) + "," +
                           to_string(f.scale_kind) + "," + fmt17(f.scale_value) + "," +
                           fmt17(f.x_radius) + "," + fmt17(f.s_value) + "," +
                           fmt17(f.ci_low) + "," + fmt17(f.ci_high) + "," +
                           fmt17(f.log_moment) + "," + fmt17(f.log_stderr) + "," +
                           std::to_string(f.clip_events) + "," + to_string(row.sign) +
                           "," + to_string(row.trend) + "\n";
                }
            }
            sink.write("front.csv", csv);
        }
        if (sink.wants("json")) {
            ordered_json summary;
            summary["scale"] = to_string(config.front.scale);
            summary["delta"] = config.front.delta;
            summary["rho_grid"] = scan.rho_grid;
            summary["t_grid"] = scan.t_grid;
            ordered_json rows = ordered_json::array();
            for (const auto& row : scan.rows) {
                ordered_json r;
                r["rho"] = row.rho;
                r["sign"] = to_string(row.sign);
                r["trend"] = to_string(row.trend);
                rows.push_back(std::move(r));
            }
            summary["classifications"] = rows;
            if (bracket) {
                ordered_json b;
                b["lo"] = bracket->lo;
                b["hi"] = bracket->hi;
                b["refinements"] = bracket->refinements;
                ordered_json probes = ordered_json::array();
                for (const auto& f : bracket->probes) {
                    ordered_json pr;
                    pr["rho"] = f.rho;
                    pr["t"] = f.t;
                    pr["s_value"] =
                        std::isfinite(f.s_value) ? ordered_json(f.s_value) : nullptr;
                    pr["ci_low"] =
                        std::isfinite(f.ci_low) ? ordered_json(f.ci_low) : nullptr;
                    pr["ci_high"] =
                        std::isfinite(f.ci_high) ? ordered_json(f.ci_high) : nullptr;
                    probes.push_back(std::move(pr));
                }
                b["probes"] = probes;
                summary["bracket"] = b;
            } else {
                summary["bracket"] = nullptr;
            }
            summary["bracket_note"] = bracket_note;
            if (comparison) {
                ordered_json cmp;
                cmp["slack"] = comparison->slack;
                ordered_json vrows = ordered_json::array();
                for (const auto& row : comparison->rows) {
                    ordered_json r;
                    r["name"] = row.name;
                    r["bound"] = row.bound;
                    r["verdict"] = to_string(row.verdict);
                    r["note"] = row.note;
                    vrows.push_back(std::move(r));
                }
                cmp["rows"] = vrows;
                summary["comparisons"] = cmp;
            } else {
                summary["comparisons"] = nullptr;
            }
            summary["bounds"] = bounds_json(bounds);
            summary["config"] = config_json(config);
            sink.write("front_summary.json", summary.dump(2) + "\n");
        }
        RunManifest man = make_manifest("front", config);
        man.clip_events = clip_total;
        man.flags = flags;
        finish_manifest(man, sink, watch, out);
    } catch (...) {
        sink.discard();
        throw;
    }
}

void run_smallball(const ExperimentConfig& config, const SmallBallRequest& request,
                   unsigned workers, std::ostream& out) {
    if (!(request.eps > 0.0)) throw ConfigError("smallball --eps must be > 0");
    ExperimentConfig cfg = config;
    if (request.reps) {
        if (*request.reps < 2) throw ConfigError("smallball --reps must be >= 2");
        cfg.mc.n_rep = *request.reps;
    }
    if (request.steps) {
        if (*request.steps < 2) throw ConfigError("smallball --steps must be >= 2");
        cfg.mc.n_steps = *request.steps;
    }
    if (request.seed) cfg.mc.seed = *request.seed;

    const Stopwatch watch;
    const SmallBallEstimate est = small_ball_mc(cfg.model.d, request.eps, cfg.mc.n_steps,
                                                cfg.mc.n_rep, cfg.mc.seed, workers);
    const double log_p = est.p_hat > 0.0 ? std::log(est.p_hat) : -kInf;
    const double exponent = -2.0 * request.eps * request.eps * log_p;
    const double j_sq =
        -2.0 * request.eps * request.eps *
        sf::small_ball_log_asymptotic(cfg.model.d, request.eps); // = j_nu^2

    out << "smallball d=" << cfg.model.d << " eps=" << fmt17(request.eps) << ": p_hat "
        << fmt17(est.p_hat) << " (stderr " << fmt17(est.stderr_estimate)
        << "), -2 eps^2 log p_hat " << fmt17(exponent) << " vs bessel zero sq "
        << fmt17(j_sq) << '\n';

    OutputSink sink(cfg.output);
    try {
        if (sink.wants("csv")) {
            std::string csv =
                "d,eps,p_hat,stderr,n_rep,n_steps,seed,neg_two_eps2_log_p\n";
            csv += std::to_string(cfg.model.d) + "," + fmt17(request.eps) + "," +
                   fmt17(est.p_hat) + "," + fmt17(est.stderr_estimate) + "," +
                   std::to_string(est.n_rep) + "," + std::to_string(est.n_steps) + "," +
                   std::to_string(est.seed) + "," + fmt17(exponent) + "\n";
            sink.write("smallball.csv", csv);
        }
        if (sink.wants("json")) {
            ordered_json j;
            j["d"] = cfg.model.d;
            j["eps"] = request.eps;
            j["p_hat"] = est.p_hat;
            j["stderr"] = est.stderr_estimate;
            j["n_rep"] = est.n_rep;
            j["n_steps"] = est.n_steps;
            j["seed"] = est.seed;
            j["neg_two_eps2_log_p"] =
                std::isfinite(exponent) ? ordered_json(exponent) : nullptr;
            j["bessel_zero_sq"] = j_sq;
            j["config"] = config_json(cfg);
            sink.write("smallball.json", j.dump(2) + "\n");
        }
        RunManifest man = make_manifest("smallball", cfg);
        man.flags.push_back("request: eps=" + fmt17(request.eps));
        finish_manifest(man, sink, watch, out);
    } catch (...) {
        sink.discard();
        throw;
    }
}

// ---------------------------------------------------------------------------
// Selftest

namespace {

struct CheckResult {
    bool ok = false;
    std::string detail;
};

std::string got_want(double got, double want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "got %.12g, want %.12g", got, want);
    return buf;
}

bool close_abs(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

BrownianPath zero_path(std::size_t n) {
    BrownianPath p;
    p.d = 1;
    p.t = 1.0;
    p.n_steps = n;
    p.increments.assign(n + 1, 0.0);
    p.mid.assign(n, 0.0);
    p.end.assign(1, 0.0);
    return p;
}

BrownianPath line_path(std::size_t n, double slope) {
    BrownianPath p = zero_path(n);
    for (std::size_t k = 0; k < n; ++k) p.mid[k] = slope * p.mid_time(k);
    p.end[0] = slope;
    return p;
}

// P{ sup_{[0,1]} |B_s| <= eps } for a 1-d Brownian motion, by the reflection
// principle: (4/pi) sum_k (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 / (8 eps^2)).
double reflection_series(double eps) {
    double sum = 0.0;
    for (int k = 0; k < 64; ++k) {
        const double odd = 2.0 * k + 1.0;
        const double term =
            std::exp(-odd * odd * kPi * kPi / (8.0 * eps * eps)) / odd;
        sum += (k % 2 == 0) ? term : -term;
    }
    return 4.0 / kPi * sum;
}

} // namespace

int run_selftest(unsigned workers, std::ostream& out) {
    int failures = 0;
    const auto check = [&](const char* name,
                           const std::function<CheckResult()>& body) {
        CheckResult r;
        try {
            r = body();
        } catch (const std::exception& e) {
            r.ok = false;
            r.detail = std::string("exception: ") + e.what();
        }
        out << (r.ok ? "pass" : "FAIL") << "  " << name;
        if (!r.detail.empty()) out << "  (" << r.detail << ")";
        out << '\n';
        if (!r.ok) ++failures;
    };

    check("moment-zero-variance", [&]() -> CheckResult {
        ModelParams model;
        model.lambda = 1.0;
        model.u0 = InitialCondition::constant_one();
        McParams mc;
        mc.n_rep = 64;
        mc.n_steps = 64;
        mc.seed = 11;
        mc.workers = workers;
        const MomentEstimate est =
            moment_estimate(model, TimeCovariance::constant(1.0),
                            SpaceCovariance::constant_level(1, 1.0), 1.0, 0.0, mc);
        const bool ok = close_abs(est.value, std::numbers::e, 1e-12) &&
                        est.stderr_estimate == 0.0;
        return {ok, got_want(est.value, std::numbers::e) + ", stderr " +
                        fmt17(est.stderr_estimate)};
    });

    check("moment-lambda-zero", [&]() -> CheckResult {
        ModelParams model;
        model.lambda = 0.0;
        McParams mc;
        mc.n_rep = 16;
        mc.n_steps = 16;
        mc.seed = 3;
        mc.workers = workers;
        const TimeCovariance gamma = TimeCovariance::constant(1.0);
        const SpaceCovariance riesz = SpaceCovariance::riesz(1, 0.5);
        const MomentEstimate at0 = moment_estimate(model, gamma, riesz, 1.0, 0.0, mc);
        const MomentEstimate at2 = moment_estimate(model, gamma, riesz, 1.0, 2.0, mc);
        const double erf_half = std::erf(1.0 / std::numbers::sqrt2);
        const double want0 = erf_half * erf_half;
        const double mass2 = 0.5 * (std::erf(3.0 / std::numbers::sqrt2) -
                                    std::erf(1.0 / std::numbers::sqrt2));
        const double want2 = mass2 * mass2;
        const bool ok = close_abs(at0.value, want0, 1e-10) &&
                        close_abs(at2.value, want2, 1e-10) &&
                        at0.stderr_estimate == 0.0 && at2.stderr_estimate == 0.0;
        return {ok, got_want(at0.value, want0) + "; far " + got_want(at2.value, want2)};
    });

    check("pair-energy-power-law", [&]() -> CheckResult {
        const BrownianPath z = zero_path(4096);
        const PairEnergyResult r =
            pair_energy(z, z, TimeCovariance::power_law(0.5),
                        SpaceCovariance::constant_level(1, 1.0));
        return {close_abs(r.value, 8.0 / 3.0, 1e-9), got_want(r.value, 8.0 / 3.0)};
    });

    check("pair-energy-prescribed-riesz", [&]() -> CheckResult {
        const std::size_t n = 4096;
        const BrownianPath a = line_path(n, 1.0);
        const BrownianPath b = line_path(n, -1.0);
        PairEnergySpec spec;
        spec.clip = false;
        const PairEnergyResult r = pair_energy(a, b, TimeCovariance::constant(1.0),
                                               SpaceCovariance::riesz(1, 0.5), spec);
        const double want = (4.0 / 3.0) * (2.0 * std::numbers::sqrt2 - 2.0);
        return {close_abs(r.value, want, 1e-5), got_want(r.value, want)};
    });

    check("small-ball-reflection", [&]() -> CheckResult {
        const std::size_t n_steps = 4096;
        const SmallBallEstimate est = small_ball_mc(1, 2.0, n_steps, 10000, 20260825,
                                                    workers);
        const double oracle = reflection_series(2.0);
        // Grid maxima run below the continuous supremum by about
        // 0.5826 sqrt(h) on average, which inflates p_hat by that shift
        // times the density dP/deps; allow it on top of the noise band.
        const double dpde =
            (reflection_series(2.0 + 1e-5) - reflection_series(2.0 - 1e-5)) / 2e-5;
        const double bias_allow =
            1.5 * 0.5826 * std::sqrt(1.0 / static_cast<double>(n_steps)) * dpde;
        const double tol = 3.0 * est.stderr_estimate + bias_allow;
        return {std::abs(est.p_hat - oracle) <= tol,
                got_want(est.p_hat, oracle) + ", tol " + fmt17(tol)};
    });

    check("small-ball-exponent", [&]() -> CheckResult {
        const SmallBallEstimate est = small_ball_mc(1, 0.4, 4096, 20000, 20260825,
                                                    workers);
        const double want = kPi * kPi / 4.0;
        if (!(est.p_hat > 0.0)) return {false, "no replica stayed inside the ball"};
        const double rate = -2.0 * 0.4 * 0.4 * std::log(est.p_hat);
        return {std::abs(rate - want) <= 0.2 * want, got_want(rate, want)};
    });

    check("bessel-first-zeros", [&]() -> CheckResult {
        const double j_m = sf::bessel_first_zero(-0.5);
        const double j_0 = sf::bessel_first_zero(0.0);
        const double j_p = sf::bessel_first_zero(0.5);
        const bool ok = close_abs(j_m, kPi / 2.0, 1e-8) &&
                        close_abs(j_0, 2.404825557695773, 1e-8) &&
                        close_abs(j_p, kPi, 1e-8);
        return {ok, "j(-1/2) " + got_want(j_m, kPi / 2.0) + "; j(0) " +
                        got_want(j_0, 2.404825557695773)};
    });

    check("mittag-leffler-exp", [&]() -> CheckResult {
        double worst = 0.0, worst_z = 0.0;
        for (int i = 0; i <= 10; ++i) {
            const double z = 0.5 * i;
            const double want = std::exp(z);
            const double got = sf::mittag_leffler(1.0, z).value;
            const double err = std::abs(got - want) / std::max(1.0, want);
            if (err > worst) {
                worst = err;
                worst_z = z;
            }
        }
        return {worst <= 1e-10,
                "worst rel err " + fmt17(worst) + " at z=" + fmt17(worst_z)};
    });

    check("gamma-log-convexity", [&]() -> CheckResult {
        for (int i = 0; i + 2 < 100; ++i) {
            const double x0 = 0.2 + 9.8 * i / 99.0;
            const double x1 = 0.2 + 9.8 * (i + 1) / 99.0;
            const double x2 = 0.2 + 9.8 * (i + 2) / 99.0;
            if (2.0 * sf::log_gamma(x1) >
                sf::log_gamma(x0) + sf::log_gamma(x2) + 1e-12)
                return {false, "midpoint convexity broken at x=" + fmt17(x1)};
        }
        return {true, ""};
    });

    check("spectral-riesz-closed-forms", [&]() -> CheckResult {
        const SpectralMeasure mu = SpectralMeasure::riesz_density(1, 0.5);
        const double c1 = spectral_tail(mu, 1.0);
        const double d1 = spectral_bulk(mu, 1.0);
        const double want_c = (4.0 / 3.0) * std::sqrt(2.0 * kPi);
        const double want_d = 4.0 * std::sqrt(2.0 * kPi);
        const bool ok = close_rel(c1, want_c, 1e-8) && close_rel(d1, want_d, 1e-8);
        return {ok, "C_1 " + got_want(c1, want_c) + "; D_1 " + got_want(d1, want_d)};
    });

    check("threshold-closed-form", [&]() -> CheckResult {
        const SpectralMeasure mu = SpectralMeasure::riesz_density(1, 0.5);
        const double n1 = frequency_threshold(mu, 2, 1.0, 1.0);
        const double want =
            std::pow((4.0 / 3.0) * std::sqrt(2.0 * kPi) * 16.0 / kPi, 2.0 / 3.0);
        const double n8 = frequency_threshold(mu, 2, 1.0, 8.0);
        const bool ok = close_rel(n1, want, 1e-8) &&
                        close_rel(n8, want * std::pow(8.0, 2.0 / 3.0), 1e-8);
        return {ok, got_want(n1, want) + "; at G=8 " +
                        got_want(n8, want * std::pow(8.0, 2.0 / 3.0))};
    });

    check("theta-scale-identity", [&]() -> CheckResult {
        const SpectralMeasure mu = SpectralMeasure::riesz_density(1, 0.5);
        const double n1 = frequency_threshold(mu, 2, 1.0, 1.0);
        const double theta =
            theta_scale(mu, TimeCovariance::constant(1.0), 2, 1.0, 1.0);
        const double want = n1 * std::sqrt(3.0);
        return {close_rel(theta, want, 1e-10), got_want(theta, want)};
    });

    check("front-scale-closed-forms", [&]() -> CheckResult {
        const TimeCovariance gamma = TimeCovariance::constant(1.0);
        const SpaceCovariance riesz = SpaceCovariance::riesz(1, 0.5);
        const double vt = front_scale(gamma, riesz, ScaleKind::Vartheta, 2, 1.0, 8.0,
                                      0.5);
        const double et = front_scale(gamma, riesz, ScaleKind::Eta, 2, 1.0, 8.0, 0.5);
        const double want_vt = std::pow(8.0, 2.0 / 3.0);
        const double want_et = std::pow(2.0, 2.0 / 3.0);
        const bool ok = close_rel(vt, want_vt, 1e-12) && close_rel(et, want_et, 1e-12);
        return {ok, "vartheta " + got_want(vt, want_vt) + "; eta " +
                        got_want(et, want_et)};
    });

    check("riesz-upper-front-value", [&]() -> CheckResult {
        const double v = riesz_upper_front(1, 0.5, 1.0, 2).value;
        return {close_abs(v, 5.220, 1e-3), got_want(v, 5.220)};
    });

    check("riesz-upper-front-identity", [&]() -> CheckResult {
        const std::pair<int, double> grid[] = {{1, 0.3}, {1, 0.9}, {2, 1.2}, {3, 1.5}};
        double worst = 0.0;
        for (const auto& [d, beta] : grid) {
            for (double lambda : {0.7, 1.3}) {
                for (int p : {2, 3}) {
                    const RieszUpperFront r = riesz_upper_front(d, beta, lambda, p);
                    const double alt =
                        std::numbers::sqrt2 *
                        std::pow(r.b_constant * (p - 1.0) * lambda * lambda,
                                 1.0 / (2.0 - beta));
                    worst = std::max(
                        worst, std::abs(r.value - alt) / std::max(r.value, alt));
                }
            }
        }
        return {worst <= 1e-12, "worst rel gap " + fmt17(worst)};
    });

    check("white-fronts", [&]() -> CheckResult {
        const White1DFronts w = white_1d_fronts(1.0, 2, 0.5);
        const bool ok = close_abs(w.upper, 2.8284, 1e-4) &&
                        close_abs(w.lower, 0.017186, 1e-4) &&
                        close_rel(w.upper, 2.0 * std::numbers::sqrt2, 1e-12);
        return {ok, "upper " + got_want(w.upper, 2.8284) + "; lower " +
                        got_want(w.lower, 0.017186)};
    });

    check("lower-front-bound", [&]() -> CheckResult {
        ModelParams model;
        model.d = 2;
        const RieszEnvelope env{1.0, kInf, 1.0};
        const double v = lower_front_bound(model, env, 0.5);
        const double c = lower_front_constant(2, 1.0, 0.5, 1.0);
        const bool ok =
            close_abs(v, 0.10396, 1e-4) && close_abs(c * c, 0.010808, 1e-5);
        return {ok, got_want(v, 0.10396) + "; C " + got_want(c * c, 0.010808)};
    });

    check("support-restriction-white", [&]() -> CheckResult {
        ModelParams model;
        const double m = support_radius_restriction(model, SpaceCovariance::white_1d(),
                                                    TimeCovariance::dirac(), 0.5);
        const double want = 182.80103207040327; // sqrt(2) pi^{5/2} e^2
        return {close_rel(m, want, 1e-12), got_want(m, want)};
    });

    check("support-restriction-envelope", [&]() -> CheckResult {
        ModelParams model;
        model.d = 2;
        const double m = support_radius_restriction(
            model, SpaceCovariance::lower_riesz_envelope(2, 1.0, 1.0, 1.0),
            TimeCovariance::dirac(), 0.5);
        const double j0 = sf::bessel_first_zero(0.0);
        const double want = 8.0 * j0 * j0;
        return {close_rel(m, want, 1e-10), got_want(m, want)};
    });

    check("max-lemma-stationarity", [&]() -> CheckResult {
        const double sets[][3] = {{1.0, 1.0, 0.5}, {2.5, 0.7, 1.2}, {0.3, 4.0, 0.8}};
        for (const auto& s : sets) {
            const double a = s[0], b = s[1], beta = s[2];
            const MaxLemmaResult r = max_lemma(a, b, beta);
            const auto f = [&](double x) {
                return a * std::pow(x, -beta) - b / (x * x);
            };
            if (!close_rel(f(r.argmax), r.value, 1e-12))
                return {false, "value mismatch, " + got_want(f(r.argmax), r.value)};
            const double slack = 1e-9 * std::abs(r.value);
            if (f(r.argmax * (1.0 + 1e-6)) > r.value + slack ||
                f(r.argmax * (1.0 - 1e-6)) > r.value + slack)
                return {false, "not a local max at A=" + fmt17(a)};
        }
        return {true, ""};
    });

    check("heat-kernel-sandwich", [&]() -> CheckResult {
        const HeatKernelSandwich s1 = heat_kernel_sandwich(1, 1.0, 1.0, 2.0, 1.0);
        const double oracle = 0.5 * (std::erf(3.0 / std::numbers::sqrt2) -
                                     std::erf(1.0 / std::numbers::sqrt2));
        if (!close_rel(s1.integral, oracle, 1e-9))
            return {false, got_want(s1.integral, oracle)};
        const HeatKernelSandwich s2 = heat_kernel_sandwich(2, 0.5, 1.0, 1.5, 2.0);
        const HeatKernelSandwich s3 = heat_kernel_sandwich(3, 2.0, 0.7, 1.0, 0.5);
        for (const auto& s : {s1, s2, s3}) {
            if (!(s.lower <= s.integral && s.integral <= s.upper))
                return {false, "ordering broken: " + fmt17(s.lower) + " / " +
                                   fmt17(s.integral) + " / " + fmt17(s.upper)};
        }
        return {true, got_want(s1.integral, oracle)};
    });

    check("simplex-comparison", [&]() -> CheckResult {
        const SpectralMeasure one = SpectralMeasure::atomic(1, {{1.0, 1.0}});
        const SimplexComparison c1 = simplex_moment_comparison(one, 1.0, 1.0, 1);
        const double want = 1.0 - std::exp(-1.0);
        if (!close_abs(c1.lhs, want, 1e-10) || !c1.holds)
            return {false, got_want(c1.lhs, want)};
        const SpectralMeasure two =
            SpectralMeasure::atomic(2, {{0.5, 0.3}, {2.0, 0.7}});
        for (int n : {1, 2, 3}) {
            if (!simplex_moment_comparison(two, 1.0, 0.8, n).holds)
                return {false, "majorant fails at n=" + std::to_string(n)};
        }
        return {true, got_want(c1.lhs, want)};
    });

    check("time-double-integral", [&]() -> CheckResult {
        const TimeDoubleIntegral sq = time_double_integral(TimeCovariance::constant(1.0),
                                                           2.0);
        if (!close_abs(sq.value, 4.0, 1e-12)) return {false, got_want(sq.value, 4.0)};
        if (!close_abs(sq.quoted_rel_gap, 1.0, 1e-12))
            return {false, "quoted-factor gap " + got_want(sq.quoted_rel_gap, 1.0)};
        const TimeDoubleIntegral c3 =
            time_double_integral(TimeCovariance::constant(3.0), 1.0);
        if (!close_abs(c3.value, 3.0, 1e-12)) return {false, got_want(c3.value, 3.0)};
        const TimeDoubleIntegral pl =
            time_double_integral(TimeCovariance::power_law(0.5), 1.0);
        if (!close_rel(pl.value, 8.0 / 3.0, 1e-8))
            return {false, got_want(pl.value, 8.0 / 3.0)};
        time_double_integral(TimeCovariance::power_law(0.3), 1.5);
        time_double_integral(TimeCovariance::power_law(0.7), 1.5);
        return {true, "factor-4 variant differs by 100% of the verified value; "
                      "recorded, not adopted"};
    });

    check("polar-gaussian-constants", [&]() -> CheckResult {
        const std::pair<int, double> grid[] = {{1, 0.5}, {2, 1.0}, {3, 1.5}};
        double worst = 0.0;
        for (const auto& [d, beta] : grid) {
            const double closed = polar_gaussian_constant(d, beta);
            const auto bulk = [](double r) { return std::exp(-r * r); };
            const double inner =
                quad::integrate_power_weight(bulk, beta - 1.0, 1.0).value +
                quad::integrate_to_infinity(
                    [beta](double r) {
                        return std::exp(-r * r) * std::pow(r, beta - 1.0);
                    },
                    1.0)
                    .value;
            const double q = sf::unit_sphere_area(d) * inner;
            worst = std::max(worst, std::abs(closed - q) / std::max(closed, q));
        }
        return {worst <= 1e-8, "worst rel gap " + fmt17(worst)};
    });

    check("chaos-ratio-cap", [&]() -> CheckResult {
        struct Set {
            int d;
            double beta;
            int p;
            double lambda;
            TimeCovariance gamma;
            double t;
        };
        const Set sets[] = {
            {1, 0.5, 2, 1.0, TimeCovariance::constant(1.0), 1.0},
            {1, 0.5, 3, 0.5, TimeCovariance::power_law(0.4), 2.0},
            {2, 1.0, 2, 2.0, TimeCovariance::constant(0.3), 1.5},
            {2, 1.5, 4, 0.8, TimeCovariance::power_law(0.7), 3.0},
        };
        for (const auto& s : sets) {
            ModelParams model;
            model.d = s.d;
            model.lambda = s.lambda;
            model.p = s.p;
            const ChaosTailBound b = chaos_tail_bound(
                model, SpectralMeasure::riesz_density(s.d, s.beta), s.gamma, s.t);
            if (!(b.base_ratio <= 0.5 + 1e-12))
                return {false, "ratio " + fmt17(b.base_ratio) + " above 1/2"};
            if (!(b.total <= 2.0 + 1e-12))
                return {false, "total " + fmt17(b.total) + " above 2"};
            if (!close_abs(b.base_ratio, 0.5, 1e-6))
                return {false, "threshold not tight: ratio " + fmt17(b.base_ratio)};
            if (b.terms.empty() || b.terms.front().term != 1.0)
                return {false, "n=0 term is not 1"};
        }
        return {true, "ratio pinned at 1/2, total at 2, on all parameter sets"};
    });

    check("riesz-chaos-series", [&]() -> CheckResult {
        ModelParams model;
        model.lambda = 1.0;
        const SpaceCovariance riesz = SpaceCovariance::riesz(1, 0.5);
        const TimeCovariance gamma = TimeCovariance::constant(1.0);
        const RieszChaosBound r1 = riesz_chaos_bound(model, riesz, gamma, 1.0);
        if (r1.asymptotic_regime)
            return {false, "t=1 should stay in the partial-sum regime"};
        double direct = 0.0;
        for (int n = 0; n < 200; ++n)
            direct += std::exp(n * std::log(r1.series_z) -
                               sf::log_gamma(r1.series_a * n + 1.0));
        if (!close_rel(r1.total, direct, 1e-8))
            return {false, got_want(r1.total, direct)};
        const RieszChaosBound r2 = riesz_chaos_bound(model, riesz, gamma, 4.0);
        if (!r2.asymptotic_regime)
            return {false, "t=4 should reach the asymptotic regime"};
        if (!close_abs(r2.log_total, r2.log_asymptotic, 1e-9))
            return {false, "asymptotic log " +
                               got_want(r2.log_total, r2.log_asymptotic)};
        return {true, got_want(r1.total, direct)};
    });

    check("dalang-closed-forms", [&]() -> CheckResult {
        const DalangResult leb = dalang_check(SpectralMeasure::lebesgue_1d());
        if (!leb.finite() || !close_rel(leb.value, kPi, 1e-10))
            return {false, "lebesgue " + got_want(leb.value, kPi)};
        const DalangResult rz = dalang_check(SpectralMeasure::riesz_density(1, 0.5));
        const double c = riesz_fourier_constant(1, 0.5);
        const auto low = [](double xi) { return 1.0 / (1.0 + xi * xi); };
        const double q =
            2.0 * c *
            (quad::integrate_power_weight(low, -0.5, 1.0).value +
             quad::integrate_to_infinity(
                 [](double xi) { return std::pow(xi, -0.5) / (1.0 + xi * xi); }, 1.0)
                 .value);
        const bool ok = rz.finite() && close_rel(rz.value, q, 1e-8);
        return {ok, "riesz " + got_want(rz.value, q)};
    });

    check("front-zero-variance", [&]() -> CheckResult {
        ModelParams model;
        model.lambda = 1.0;
        model.u0 = InitialCondition::constant_one();
        McParams mc;
        mc.n_rep = 64;
        mc.n_steps = 64;
        mc.seed = 5;
        mc.workers = workers;
        const FrontFunctional f = normalized_log_moment(
            model, TimeCovariance::constant(1.0), SpaceCovariance::constant_level(1, 1.0),
            1.0, 0.0, ScaleKind::Vartheta, mc);
        // scale = Gamma_t^{1/2} = 1, so S = lambda^2 p (p-1) t / 2 = 1.
        const bool ok = close_abs(f.s_value, 1.0, 1e-12) && f.ci_low == f.s_value &&
                        f.ci_high == f.s_value;
        return {ok, got_want(f.s_value, 1.0)};
    });

    check("moment-determinism", [&]() -> CheckResult {
        ModelParams model;
        model.lambda = 0.5;
        const auto run_with = [&](unsigned w) {
            McParams mc;
            mc.n_rep = 128;
            mc.n_steps = 64;
            mc.seed = 99;
            mc.workers = w;
            return moment_estimate(model, TimeCovariance::constant(1.0),
                                   SpaceCovariance::riesz(1, 0.5), 0.5, 0.3, mc);
        };
        const MomentEstimate e1 = run_with(workers);
        const MomentEstimate e2 = run_with(1);
        const MomentEstimate e3 = run_with(3);
        const bool ok = bits_equal(e1.log_value, e2.log_value) &&
                        bits_equal(e2.log_value, e3.log_value) &&
                        bits_equal(e1.value, e2.value) &&
                        bits_equal(e2.value, e3.value) &&
                        bits_equal(e1.stderr_estimate, e2.stderr_estimate) &&
                        bits_equal(e2.stderr_estimate, e3.stderr_estimate);
        return {ok, "log_value " + fmt17(e1.log_value) + " across worker counts"};
    });

    if (failures == 0) {
        out << "selftest: all checks passed\n";
    } else {
        out << "selftest: " << failures << " check(s) failed\n";
    }
    return failures;
}

int guarded(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "unexpected error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

} // namespace ifl
