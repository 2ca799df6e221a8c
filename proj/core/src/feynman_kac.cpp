#include "ifl/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

#include "ifl/quadrature.hpp"
#include "ifl/rng.hpp"
#include "ifl/special_functions.hpp"

namespace ifl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
constexpr std::size_t kSamplerCap = 1000000;

} // namespace

// ---------------------------------------------------------------------------
// Reductions

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double log_sum_exp_tree(std::span<const double> values) {
    double top = -kInf;
    for (double v : values) top = std::max(top, v);
    if (values.empty() || top == -kInf) return -kInf;
    if (top == kInf) return kInf;
    std::vector<double> scaled(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        scaled[i] = std::exp(values[i] - top);
    return top + std::log(pairwise_sum(scaled));
}

unsigned resolve_workers(unsigned requested) {
    if (const char* env = std::getenv("IFL_WORKERS")) {
        char* endp = nullptr;
        const unsigned long v = std::strtoul(env, &endp, 10);
        if (endp != env && *endp == '\0' && v > 0 && v < 4096) {
            return static_cast<unsigned>(v);
        }
    }
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

namespace {

// Runs fn(lo, hi) over a contiguous block partition of [0, n). Each block
// touches a disjoint index range, so workers never share mutable state; any
// reduction happens afterwards in index order.
void parallel_blocks(std::size_t n, unsigned workers,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const unsigned w =
        static_cast<unsigned>(std::min<std::size_t>(workers > 0 ? workers : 1, n));
    if (w <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(w);
    pool.reserve(w);
    for (unsigned i = 0; i < w; ++i) {
        const std::size_t lo = n * i / w;
        const std::size_t hi = n * (i + 1) / w;
        pool.emplace_back([&fn, &errors, i, lo, hi]() {
            try {
                fn(lo, hi);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace

// ---------------------------------------------------------------------------
// Path sampling

namespace {

// Fills a path from a stream: half step to h/2, full steps between midpoints,
// half step to t. Positions are prefix sums of the increments.
void fill_free_path(BrownianPath& path, rng::CounterStream& stream, int d, double t,
                    std::size_t n) {
    path.d = d;
    path.t = t;
    path.n_steps = n;
    path.increments.resize((n + 1) * d);
    path.mid.resize(n * d);
    path.end.resize(d);
    const double h = t / static_cast<double>(n);
    const double s_half = std::sqrt(0.5 * h);
    const double s_full = std::sqrt(h);
    for (std::size_t k = 0; k <= n; ++k) {
        const double sigma = (k == 0 || k == n) ? s_half : s_full;
        for (int j = 0; j < d; ++j)
            path.increments[k * d + j] = sigma * stream.next_normal();
    }
    for (int j = 0; j < d; ++j) path.mid[j] = path.increments[j];
    for (std::size_t k = 1; k < n; ++k)
        for (int j = 0; j < d; ++j)
            path.mid[k * d + j] = path.mid[(k - 1) * d + j] + path.increments[k * d + j];
    for (int j = 0; j < d; ++j)
        path.end[j] = path.mid[(n - 1) * d + j] + path.increments[n * d + j];
}

// Conditions a free path on a prescribed endpoint g: subtract the linear
// interpolation of the sampled endpoint, add back the target drift.
void condition_on_endpoint(BrownianPath& path, const double* g) {
    const std::size_t n = path.n_steps;
    const int d = path.d;
    const double t = path.t;
    for (std::size_t k = 0; k < n; ++k) {
        const double frac = path.mid_time(k) / t;
        for (int j = 0; j < d; ++j)
            path.mid[k * d + j] += frac * (g[j] - path.end[j]);
    }
    for (int j = 0; j < d; ++j) path.end[j] = g[j];
    for (int j = 0; j < d; ++j) path.increments[j] = path.mid[j];
    for (std::size_t k = 1; k < n; ++k)
        for (int j = 0; j < d; ++j)
            path.increments[k * d + j] = path.mid[k * d + j] - path.mid[(k - 1) * d + j];
    for (int j = 0; j < d; ++j)
        path.increments[n * d + j] = path.end[j] - path.mid[(n - 1) * d + j];
}

} // namespace

BrownianEnsemble sample_paths(int p, int d, double t, std::size_t n_steps,
                              std::uint64_t master_seed, std::uint64_t replica,
                              std::uint64_t cell) {
    if (p < 1) throw DomainError("sample_paths requires p >= 1");
    if (d < 1) throw DomainError("sample_paths requires d >= 1");
    if (!(t > 0.0)) throw DomainError("sample_paths requires t > 0");
    if (n_steps < 2) throw DomainError("sample_paths requires n_steps >= 2");
    BrownianEnsemble ens;
    ens.p = p;
    ens.d = d;
    ens.t = t;
    ens.n_steps = n_steps;
    ens.master_seed = master_seed;
    ens.replica = replica;
    ens.paths.resize(static_cast<std::size_t>(p));
    rng::CounterStream stream(master_seed, rng::StreamPurpose::Moment, cell, replica);
    for (auto& path : ens.paths) fill_free_path(path, stream, d, t, n_steps);
    return ens;
}

// ---------------------------------------------------------------------------
// Pair energy

namespace {

double clip_ceiling(const SpaceCovariance& lambda, double r0) {
    switch (lambda.family()) {
        case SpaceKernelFamily::Riesz:
            return std::pow(r0, -lambda.riesz_beta());
        case SpaceKernelFamily::Fractional:
            // Product kernel on the diffusive diagonal scale.
            return std::pow(r0, -lambda.riesz_beta());
        case SpaceKernelFamily::LowerRieszEnvelope:
            return lambda.envelope_constant() * std::pow(r0, -lambda.riesz_beta());
        default:
            return kInf;
    }
}

// Exact second antiderivative of |x|^{-alpha}; its double difference gives
// the cell-pair weights of the power-law time kernel.
struct PowerLawWeights {
    std::vector<double> w;
    PowerLawWeights(double alpha, double h, std::size_t n) : w(n) {
        const double q = (1.0 - alpha) * (2.0 - alpha);
        auto psi = [alpha, q](double x) { return std::pow(x, 2.0 - alpha) / q; };
        w[0] = 2.0 * psi(h);
        for (std::size_t m = 1; m < n; ++m)
            w[m] = psi((m + 1) * h) - 2.0 * psi(m * h) + psi((m - 1) * h);
    }
};

template <class Eval>
PairEnergyResult accumulate_pair(const BrownianPath& a, const TimeCovariance& gamma,
                                 double ceiling, Eval&& eval) {
    const std::size_t n = a.n_steps;
    const double h = a.t / static_cast<double>(n);
    PairEnergyResult out;
    std::size_t clips = 0;
    auto value_at = [&](std::size_t k, std::size_t l) {
        double v = eval(k, l);
        if (v > ceiling) {
            v = ceiling;
            ++clips;
        }
        return v;
    };
    switch (gamma.family()) {
        case TimeKernelFamily::Dirac: {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += value_at(k, k);
            out.value = 0.5 * h * s;
            break;
        }
        case TimeKernelFamily::Constant: {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l) s += value_at(k, l);
            out.value = gamma.level() * h * h * s;
            break;
        }
        case TimeKernelFamily::PowerLaw: {
            const PowerLawWeights weights(gamma.alpha(), h, n);
            double total = 0.0;
            {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += value_at(k, k);
                total += weights.w[0] * s;
            }
            for (std::size_t m = 1; m < n; ++m) {
                double s = 0.0;
                for (std::size_t k = m; k < n; ++k)
                    s += value_at(k, k - m) + value_at(k - m, k);
                total += weights.w[m] * s;
            }
            out.value = total;
            break;
        }
    }
    out.clip_events = clips;
    return out;
}

} // namespace

PairEnergyResult pair_energy(const BrownianPath& a, const BrownianPath& b,
                             const TimeCovariance& gamma, const SpaceCovariance& lambda,
                             const PairEnergySpec& spec) {
    if (a.n_steps != b.n_steps || a.n_steps < 1)
        throw DomainError("pair_energy requires matching path grids");
    if (a.d != b.d || a.t != b.t)
        throw DomainError("pair_energy requires paths on a common domain");
    if (lambda.dim() != a.d)
        throw DomainError("pair_energy kernel dimension mismatch");
    if (lambda.is_distribution())
        throw DistributionEval(
            "white-in-space kernel has no pointwise values; mollify it first");

    const std::size_t n = a.n_steps;
    const double h = a.t / static_cast<double>(n);
    const double ceiling =
        spec.clip ? clip_ceiling(lambda, spec.clip_scale * std::sqrt(h)) : kInf;
    const int d = a.d;
    const double* am = a.mid.data();
    const double* bm = b.mid.data();

    switch (lambda.family()) {
        case SpaceKernelFamily::Riesz: {
            const double beta = lambda.riesz_beta();
            if (d == 1 && beta == 0.5) {
                return accumulate_pair(a, gamma, ceiling,
                                       [am, bm](std::size_t k, std::size_t l) {
                                           const double r = std::abs(am[k] - bm[l]);
                                           return 1.0 / std::sqrt(r);
                                       });
            }
            if (d == 1) {
                return accumulate_pair(a, gamma, ceiling,
                                       [am, bm, beta](std::size_t k, std::size_t l) {
                                           const double r = std::abs(am[k] - bm[l]);
                                           return std::pow(r, -beta);
                                       });
            }
            return accumulate_pair(a, gamma, ceiling,
                                   [am, bm, beta, d](std::size_t k, std::size_t l) {
                                       double r2 = 0.0;
                                       for (int j = 0; j < d; ++j) {
                                           const double diff =
                                               am[k * d + j] - bm[l * d + j];
                                           r2 += diff * diff;
                                       }
                                       return std::pow(r2, -0.5 * beta);
                                   });
        }
        case SpaceKernelFamily::LowerRieszEnvelope: {
            const double beta = lambda.riesz_beta();
            const double c = lambda.envelope_constant();
            const double rmax = lambda.envelope_radius();
            return accumulate_pair(a, gamma, ceiling,
                                   [am, bm, beta, c, rmax, d](std::size_t k,
                                                              std::size_t l) {
                                       double r2 = 0.0;
                                       for (int j = 0; j < d; ++j) {
                                           const double diff =
                                               am[k * d + j] - bm[l * d + j];
                                           r2 += diff * diff;
                                       }
                                       const double r = std::sqrt(r2);
                                       if (r > rmax) return 0.0;
                                       return c * std::pow(r, -beta);
                                   });
        }
        case SpaceKernelFamily::Fractional: {
            const auto& hurst = lambda.hurst();
            return accumulate_pair(
                a, gamma, ceiling, [am, bm, &hurst, d](std::size_t k, std::size_t l) {
                    double v = 1.0;
                    for (int j = 0; j < d; ++j) {
                        const double diff = std::abs(am[k * d + j] - bm[l * d + j]);
                        if (diff == 0.0) return kInf;
                        v *= std::pow(diff, 2.0 * hurst[static_cast<std::size_t>(j)] - 2.0);
                    }
                    return v;
                });
        }
        case SpaceKernelFamily::ConstantLevel: {
            const double level = lambda.level();
            return accumulate_pair(a, gamma, ceiling,
                                   [level](std::size_t, std::size_t) { return level; });
        }
        case SpaceKernelFamily::MollifiedWhite: {
            const double eps = lambda.mollifier_eps();
            const double norm = std::pow(2.0 * kPi * eps, -0.5 * d);
            return accumulate_pair(a, gamma, ceiling,
                                   [am, bm, eps, norm, d](std::size_t k, std::size_t l) {
                                       double r2 = 0.0;
                                       for (int j = 0; j < d; ++j) {
                                           const double diff =
                                               am[k * d + j] - bm[l * d + j];
                                           r2 += diff * diff;
                                       }
                                       return norm * std::exp(-0.5 * r2 / eps);
                                   });
        }
        case SpaceKernelFamily::White1D:
            break; // unreachable; rejected above
    }
    throw DomainError("unsupported kernel in pair_energy");
}

// ---------------------------------------------------------------------------
// Mean field

namespace {

// log of int u0(y) p_t(y - x) dy with the leading Gaussian tail factored out,
// so far-field queries stay finite in the log domain.
double log_mean_field_impl(const InitialCondition& u0, double t, double x, int d) {
    if (u0.family() == InitialFamily::ConstantOne) return 0.0;
    const double m = u0.support_radius();
    const double rt = std::sqrt(t);
    if (d == 1 && u0.family() == InitialFamily::IndicatorBall) {
        return std::log(u0.sup_norm()) +
               sf::log_gaussian_interval_mass((-m - x) / rt, (m - x) / rt);
    }
    const double shift = std::max(0.0, x - m);
    const double shift2 = shift * shift;
    quad::Options opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = 1e-11;

    auto outer = [&](double y1) -> double {
        const double dx1 = y1 - x;
        const double g1 = std::exp(-0.5 * (dx1 * dx1 - shift2) / t) /
                          std::sqrt(2.0 * kPi * t);
        if (d == 1) return g1 * u0.radial_value(std::abs(y1));
        const double w2 = m * m - y1 * y1;
        const double w = std::sqrt(std::max(w2, 0.0));
        if (w == 0.0) return 0.0;
        if (d == 2) {
            if (u0.family() == InitialFamily::IndicatorBall) {
                const double inner =
                    0.5 * (std::erf(w / (rt * std::numbers::sqrt2)) -
                           std::erf(-w / (rt * std::numbers::sqrt2)));
                return g1 * u0.sup_norm() * inner;
            }
            auto f2 = [&](double y2) {
                return u0.radial_value(std::hypot(y1, y2)) *
                       std::exp(-0.5 * y2 * y2 / t) / std::sqrt(2.0 * kPi * t);
            };
            return g1 * quad::integrate(f2, -w, w, opt).value;
        }
        // d == 3: radial mass of the centered 2-d Gaussian slice.
        if (u0.family() == InitialFamily::IndicatorBall) {
            return g1 * u0.sup_norm() * (-std::expm1(-0.5 * w * w / t));
        }
        auto f3 = [&](double rho) {
            return u0.radial_value(std::hypot(y1, rho)) *
                   std::exp(-0.5 * rho * rho / t) * rho / t;
        };
        return g1 * quad::integrate(f3, 0.0, w, opt).value;
    };

    const quad::Result res = quad::integrate(outer, -m, m, opt);
    if (!res.converged)
        throw QuadratureFailure("mean field quadrature did not converge");
    if (!(res.value > 0.0)) return -kInf;
    return -0.5 * shift2 / t + std::log(res.value);
}

} // namespace

double log_mean_field(const InitialCondition& u0, double t, double x_radius, int d) {
    if (!(t > 0.0)) throw DomainError("mean field requires t > 0");
    if (x_radius < 0.0) throw DomainError("mean field requires x_radius >= 0");
    if (d < 1 || d > 3) throw DomainError("mean field supports d in {1,2,3}");
    return log_mean_field_impl(u0, t, x_radius, d);
}

double mean_field(const InitialCondition& u0, double t, double x_radius, int d) {
    return std::exp(log_mean_field(u0, t, x_radius, d));
}

// ---------------------------------------------------------------------------
// Endpoint sampling for the conditioned estimator

namespace {

double truncated_normal_tail(rng::CounterStream& s, double a, double b) {
    // Exponential-proposal tail sampler, truncated above at b.
    const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (std::size_t it = 0; it < kSamplerCap; ++it) {
        const double u = s.next_uniform();
        const double z = a - std::log(u) / alpha;
        if (z > b) continue;
        const double v = s.next_uniform();
        const double w = z - alpha;
        if (std::log(v) <= -0.5 * w * w) return z;
    }
    throw Error("truncated normal tail sampler stalled");
}

// Draws endpoints g with density proportional to u0(x_hat + g) phi_t(g); the
// query point sits at (x, 0, ..., 0).
class EndpointSampler {
public:
    EndpointSampler(const InitialCondition& u0, int d, double t, double x)
        : u0_(&u0), d_(d), t_(t), x_(x), rt_(std::sqrt(t)) {
        if (u0.family() == InitialFamily::ConstantOne) {
            kind_ = Kind::Free;
            return;
        }
        const double m = u0.support_radius();
        if (d == 1) {
            a_ = (-m - x) / rt_;
            b_ = (m - x) / rt_;
            const double mass = std::exp(sf::log_gaussian_interval_mass(a_, b_));
            if (mass >= 0.05)
                kind_ = Kind::Interval;
            else if (a_ >= 0.0)
                kind_ = Kind::RightTail;
            else if (b_ <= 0.0)
                kind_ = Kind::LeftTail;
            else
                kind_ = Kind::NarrowInterval;
            return;
        }
        kind_ = Kind::Ball;
        shift_ = std::max(0.0, x - m);
    }

    void draw(rng::CounterStream& s, double* g) const {
        switch (kind_) {
            case Kind::Free:
                for (int j = 0; j < d_; ++j) g[j] = rt_ * s.next_normal();
                return;
            case Kind::Interval:
            case Kind::RightTail:
            case Kind::LeftTail:
            case Kind::NarrowInterval:
                g[0] = rt_ * draw_1d(s);
                return;
            case Kind::Ball:
                draw_ball(s, g);
                return;
        }
    }

private:
    enum class Kind { Free, Interval, RightTail, LeftTail, NarrowInterval, Ball };

    double draw_1d(rng::CounterStream& s) const {
        for (std::size_t outer = 0; outer < kSamplerCap; ++outer) {
            double z = 0.0;
            switch (kind_) {
                case Kind::Interval: {
                    bool ok = false;
                    for (std::size_t it = 0; it < kSamplerCap && !ok; ++it) {
                        z = s.next_normal();
                        ok = (z >= a_ && z <= b_);
                    }
                    if (!ok) throw Error("interval endpoint sampler stalled");
                    break;
                }
                case Kind::RightTail:
                    z = truncated_normal_tail(s, a_, b_);
                    break;
                case Kind::LeftTail:
                    z = -truncated_normal_tail(s, -b_, -a_);
                    break;
                case Kind::NarrowInterval: {
                    const double zmode = std::clamp(0.0, a_, b_);
                    bool ok = false;
                    for (std::size_t it = 0; it < kSamplerCap && !ok; ++it) {
                        z = a_ + (b_ - a_) * s.next_uniform();
                        ok = std::log(s.next_uniform()) <=
                             0.5 * (zmode * zmode - z * z);
                    }
                    if (!ok) throw Error("narrow endpoint sampler stalled");
                    break;
                }
                default:
                    throw Error("draw_1d on a non-interval sampler");
            }
            if (u0_->family() != InitialFamily::Bump) return z;
            // Thin against the bump profile; redraw on rejection.
            const double y = x_ + rt_ * z;
            const double ratio = u0_->radial_value(std::abs(y)) / u0_->sup_norm();
            if (ratio > 0.0 && std::log(s.next_uniform()) <= std::log(ratio)) return z;
        }
        throw Error("bump endpoint sampler stalled");
    }

    void draw_ball(rng::CounterStream& s, double* g) const {
        const double m = u0_->support_radius();
        const double shift2 = shift_ * shift_;
        for (std::size_t it = 0; it < kSamplerCap; ++it) {
            double norm2 = 0.0;
            for (int j = 0; j < d_; ++j) {
                g[j] = s.next_normal();
                norm2 += g[j] * g[j];
            }
            if (norm2 == 0.0) continue;
            const double radius = m * std::pow(s.next_uniform(), 1.0 / d_);
            const double scale = radius / std::sqrt(norm2);
            double dist2 = 0.0;
            for (int j = 0; j < d_; ++j) {
                const double y = g[j] * scale;
                const double c = (j == 0) ? y - x_ : y;
                dist2 += c * c;
            }
            double log_accept = -0.5 * (dist2 - shift2) / t_;
            if (u0_->family() == InitialFamily::Bump) {
                double r2 = 0.0;
                for (int j = 0; j < d_; ++j) {
                    const double y = g[j] * scale;
                    r2 += y * y;
                }
                log_accept += std::log(u0_->radial_value(std::sqrt(r2)) /
                                       u0_->sup_norm());
            }
            if (std::log(s.next_uniform()) <= log_accept) {
                for (int j = 0; j < d_; ++j) {
                    const double y = g[j] * scale;
                    g[j] = (j == 0) ? y - x_ : y;
                }
                return;
            }
        }
        throw Error("ball endpoint sampler stalled");
    }

    const InitialCondition* u0_;
    int d_;
    double t_;
    double x_;
    double rt_;
    double a_ = 0.0, b_ = 0.0;
    double shift_ = 0.0;
    Kind kind_ = Kind::Free;
};

} // namespace

// ---------------------------------------------------------------------------
// Moment estimation

namespace {

struct ReplicaBuffers {
    std::vector<BrownianPath> paths;
    std::vector<double> endpoints;
};

double product_log_u0(const InitialCondition& u0, double x,
                      const std::vector<BrownianPath>& paths) {
    double s = 0.0;
    for (const auto& path : paths) {
        double r2 = 0.0;
        for (int j = 0; j < path.d; ++j) {
            const double c = (j == 0) ? path.end[0] + x : path.end[j];
            r2 += c * c;
        }
        const double v = u0.radial_value(std::sqrt(r2));
        if (v <= 0.0) return -kInf;
        s += std::log(v);
    }
    return s;
}

} // namespace

MomentEstimate moment_estimate(const ModelParams& model, const TimeCovariance& gamma,
                               const SpaceCovariance& lambda, double t, double x_radius,
                               const McParams& mc) {
    model.validate();
    if (lambda.dim() != model.d)
        throw DomainError("moment_estimate kernel dimension mismatch");
    if (lambda.is_distribution())
        throw DomainError(
            "white-in-space kernel has no pointwise values; use mollified_white for "
            "moment estimation");
    if (!(t > 0.0)) throw DomainError("moment_estimate requires t > 0");
    if (x_radius < 0.0) throw DomainError("moment_estimate requires x_radius >= 0");

    MomentEstimate out;
    out.p = model.p;
    out.t = t;
    out.x_radius = x_radius;
    out.lambda = model.lambda;
    out.n_rep = mc.n_rep;
    out.n_steps = mc.n_steps;
    out.seed = mc.seed;
    out.mode = mc.mode;

    if (model.p == 1) {
        out.log_value = log_mean_field(model.u0, t, x_radius, model.d);
        out.value = std::exp(out.log_value);
        out.n_rep = 0;
        return out;
    }
    if (mc.n_rep < 2) throw DomainError("moment_estimate requires n_rep >= 2");
    if (mc.n_steps < 2) throw DomainError("moment_estimate requires n_steps >= 2");

    const std::size_t n_rep = mc.n_rep;
    const unsigned workers = resolve_workers(mc.workers);
    const double lam2 = model.lambda * model.lambda;
    const std::size_t n_pairs =
        static_cast<std::size_t>(model.p) * (model.p - 1) / 2;

    std::vector<double> logs(n_rep, -kInf);
    std::vector<std::size_t> clips(n_rep, 0);
    double log_m = 0.0;

    if (mc.mode == MomentMode::EndpointConditioned) {
        log_m = log_mean_field(model.u0, t, x_radius, model.d);
        if (log_m == -kInf)
            throw AllZeroMass("initial condition mass vanishes at this query point",
                              n_rep, -kInf);
        if (model.lambda == 0.0 || n_pairs == 0) {
            out.log_value = model.p * log_m;
            out.value = std::exp(out.log_value);
            return out;
        }
        const EndpointSampler sampler(model.u0, model.d, t, x_radius);
        parallel_blocks(n_rep, workers, [&](std::size_t lo, std::size_t hi) {
            ReplicaBuffers buf;
            buf.paths.resize(static_cast<std::size_t>(model.p));
            buf.endpoints.resize(static_cast<std::size_t>(model.p) * model.d);
            for (std::size_t r = lo; r < hi; ++r) {
                rng::CounterStream stream(mc.seed, rng::StreamPurpose::Moment,
                                          mc.stream_cell, r);
                for (int i = 0; i < model.p; ++i)
                    sampler.draw(stream, buf.endpoints.data() + i * model.d);
                for (int i = 0; i < model.p; ++i) {
                    fill_free_path(buf.paths[static_cast<std::size_t>(i)], stream,
                                   model.d, t, mc.n_steps);
                    condition_on_endpoint(buf.paths[static_cast<std::size_t>(i)],
                                          buf.endpoints.data() + i * model.d);
                }
                double exponent = 0.0;
                std::size_t clip_count = 0;
                for (int i = 0; i < model.p; ++i)
                    for (int j = i + 1; j < model.p; ++j) {
                        const PairEnergyResult pe = pair_energy(
                            buf.paths[static_cast<std::size_t>(i)],
                            buf.paths[static_cast<std::size_t>(j)], gamma, lambda,
                            mc.quadrature);
                        exponent += pe.value;
                        clip_count += pe.clip_events;
                    }
                logs[r] = lam2 * exponent;
                clips[r] = clip_count;
            }
        });
    } else {
        parallel_blocks(n_rep, workers, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t r = lo; r < hi; ++r) {
                BrownianEnsemble ens = sample_paths(model.p, model.d, t, mc.n_steps,
                                                    mc.seed, r, mc.stream_cell);
                const double logw = product_log_u0(model.u0, x_radius, ens.paths);
                if (logw == -kInf) {
                    logs[r] = -kInf;
                    continue;
                }
                double exponent = 0.0;
                std::size_t clip_count = 0;
                if (lam2 > 0.0) {
                    for (int i = 0; i < model.p; ++i)
                        for (int j = i + 1; j < model.p; ++j) {
                            const PairEnergyResult pe = pair_energy(
                                ens.paths[static_cast<std::size_t>(i)],
                                ens.paths[static_cast<std::size_t>(j)], gamma, lambda,
                                mc.quadrature);
                            exponent += pe.value;
                            clip_count += pe.clip_events;
                        }
                }
                logs[r] = logw + lam2 * exponent;
                clips[r] = clip_count;
            }
        });
    }

    for (std::size_t r = 0; r < n_rep; ++r) out.clip_events += clips[r];

    const double lse = log_sum_exp_tree(logs);
    if (lse == -kInf) {
        double diag = -kInf;
        try {
            diag = model.p * log_mean_field(model.u0, t, x_radius, model.d);
        } catch (const DomainError&) {
            // d > 3 has no mean-field diagnostic; report the miss plainly.
        }
        throw AllZeroMass(
            "every replica missed the initial-condition support (expected log mass " +
                std::to_string(diag) + " per replica product)",
            n_rep, diag);
    }
    const double mu_log = lse - std::log(static_cast<double>(n_rep));

    bool all_equal = true;
    for (std::size_t r = 1; r < n_rep && all_equal; ++r)
        all_equal = std::memcmp(&logs[r], &logs[0], sizeof(double)) == 0;

    double rel_sd = 0.0;
    if (!all_equal) {
        std::vector<double> dev2(n_rep);
        for (std::size_t r = 0; r < n_rep; ++r) {
            const double dev = std::expm1(logs[r] - mu_log);
            dev2[r] = dev * dev;
        }
        const double ss = pairwise_sum(dev2);
        rel_sd = std::sqrt(ss / (static_cast<double>(n_rep - 1) *
                                 static_cast<double>(n_rep)));
    }

    out.log_value = (mc.mode == MomentMode::EndpointConditioned)
                        ? model.p * log_m + mu_log
                        : mu_log;
    out.log_stderr = rel_sd;
    out.value = std::exp(out.log_value);
    out.stderr_estimate =
        (rel_sd == 0.0 || !std::isfinite(out.value)) ? 0.0 : out.value * rel_sd;
    return out;
}

// ---------------------------------------------------------------------------
// Small ball

SmallBallEstimate small_ball_mc(int d, double eps, std::size_t n_steps,
                                std::size_t n_rep, std::uint64_t seed,
                                unsigned workers) {
    if (d < 1) throw DomainError("small_ball_mc requires d >= 1");
    if (!(eps > 0.0)) throw DomainError("small_ball_mc requires eps > 0");
    if (n_steps < 2) throw DomainError("small_ball_mc requires n_steps >= 2");
    if (n_rep < 1) throw DomainError("small_ball_mc requires n_rep >= 1");

    const unsigned w = resolve_workers(workers);
    std::vector<std::uint64_t> counts(w > 0 ? w : 1, 0);
    const double sh = std::sqrt(1.0 / static_cast<double>(n_steps));
    const double eps2 = eps * eps;

    // Block index bookkeeping mirrors parallel_blocks so per-worker counts can
    // be merged in fixed order.
    const unsigned nblocks =
        static_cast<unsigned>(std::min<std::size_t>(w > 0 ? w : 1, n_rep));
    std::vector<std::uint64_t> block_counts(nblocks, 0);
    std::vector<std::thread> pool;
    auto run_block = [&](unsigned bi, std::size_t lo, std::size_t hi) {
        std::uint64_t local = 0;
        std::vector<double> pos(static_cast<std::size_t>(d));
        for (std::size_t r = lo; r < hi; ++r) {
            rng::CounterStream s(seed, rng::StreamPurpose::SmallBall, 0, r);
            bool ok = true;
            if (d == 1) {
                // Polar normal pairs: cheaper than the trig form in this loop.
                double x = 0.0;
                std::size_t k = 0;
                while (k + 1 < n_steps) {
                    double v1, v2, r2;
                    do {
                        v1 = 2.0 * s.next_uniform() - 1.0;
                        v2 = 2.0 * s.next_uniform() - 1.0;
                        r2 = v1 * v1 + v2 * v2;
                    } while (r2 >= 1.0 || r2 == 0.0);
                    const double f = sh * std::sqrt(-2.0 * std::log(r2) / r2);
                    x += f * v1;
                    if (std::abs(x) > eps) {
                        ok = false;
                        break;
                    }
                    x += f * v2;
                    if (std::abs(x) > eps) {
                        ok = false;
                        break;
                    }
                    k += 2;
                }
                if (ok && k < n_steps) {
                    x += sh * s.next_normal();
                    ok = std::abs(x) <= eps;
                }
            } else {
                std::fill(pos.begin(), pos.end(), 0.0);
                for (std::size_t k = 0; k < n_steps; ++k) {
                    double n2 = 0.0;
                    for (int j = 0; j < d; ++j) {
                        pos[static_cast<std::size_t>(j)] += sh * s.next_normal();
                        n2 += pos[static_cast<std::size_t>(j)] *
                              pos[static_cast<std::size_t>(j)];
                    }
                    if (n2 > eps2) {
                        ok = false;
                        break;
                    }
                }
            }
            if (ok) ++local;
        }
        block_counts[bi] = local;
    };
    if (nblocks <= 1) {
        run_block(0, 0, n_rep);
    } else {
        std::vector<std::exception_ptr> errors(nblocks);
        pool.reserve(nblocks);
        for (unsigned i = 0; i < nblocks; ++i) {
            const std::size_t lo = n_rep * i / nblocks;
            const std::size_t hi = n_rep * (i + 1) / nblocks;
            pool.emplace_back([&, i, lo, hi]() {
                try {
                    run_block(i, lo, hi);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::uint64_t total = 0;
    for (std::uint64_t c : block_counts) total += c;

    SmallBallEstimate est;
    est.n_rep = n_rep;
    est.n_steps = n_steps;
    est.seed = seed;
    est.p_hat = static_cast<double>(total) / static_cast<double>(n_rep);
    est.stderr_estimate =
        std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(n_rep));
    return est;
}

} // namespace ifl
