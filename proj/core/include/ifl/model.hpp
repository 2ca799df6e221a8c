#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "ifl/errors.hpp"

namespace ifl {

enum class InitialFamily { IndicatorBall, Bump, ConstantOne };

// Bounded nonnegative initial condition. The indicator and bump profiles have
// compact support in the ball of the given radius; the constant profile is a
// diagnostic mode without decay.
class InitialCondition {
public:
    static InitialCondition indicator_ball(double radius, double level = 1.0) {
        if (!(radius > 0.0)) throw DomainError("indicator radius must be > 0");
        if (!(level > 0.0)) throw DomainError("indicator level must be > 0");
        InitialCondition u;
        u.family_ = InitialFamily::IndicatorBall;
        u.radius_ = radius;
        u.level_ = level;
        return u;
    }

    static InitialCondition bump(double radius, double level = 1.0) {
        if (!(radius > 0.0)) throw DomainError("bump radius must be > 0");
        if (!(level > 0.0)) throw DomainError("bump level must be > 0");
        InitialCondition u;
        u.family_ = InitialFamily::Bump;
        u.radius_ = radius;
        u.level_ = level;
        return u;
    }

    static InitialCondition constant_one() {
        InitialCondition u;
        u.family_ = InitialFamily::ConstantOne;
        u.radius_ = std::numeric_limits<double>::infinity();
        u.level_ = 1.0;
        return u;
    }

    InitialFamily family() const { return family_; }
    double support_radius() const { return radius_; }
    // Value at the center; also the supremum for these radial profiles.
    double sup_norm() const { return level_; }
    bool compact_support() const { return family_ != InitialFamily::ConstantOne; }

    double radial_value(double r) const {
        if (r < 0.0) throw DomainError("radial_value requires r >= 0");
        switch (family_) {
            case InitialFamily::IndicatorBall:
                return r <= radius_ ? level_ : 0.0;
            case InitialFamily::Bump: {
                const double s = r / radius_;
                if (s >= 1.0) return 0.0;
                return level_ * std::exp(1.0 - 1.0 / (1.0 - s * s));
            }
            case InitialFamily::ConstantOne:
                return 1.0;
        }
        return 0.0;
    }

    double operator()(std::span<const double> x) const {
        double s = 0.0;
        for (double xi : x) s += xi * xi;
        return radial_value(std::sqrt(s));
    }

    // Guaranteed level on the ball of radius `ratio * support_radius`.
    double lower_level(double ratio = 1.0) const {
        if (!(ratio > 0.0 && ratio <= 1.0))
            throw DomainError("lower_level requires ratio in (0,1]");
        switch (family_) {
            case InitialFamily::IndicatorBall:
                return level_;
            case InitialFamily::Bump:
                return radial_value(ratio * radius_);
            case InitialFamily::ConstantOne:
                return 1.0;
        }
        return 0.0;
    }

private:
    InitialCondition() = default;
    InitialFamily family_ = InitialFamily::IndicatorBall;
    double radius_ = 1.0;
    double level_ = 1.0;
};

struct ModelParams {
    int d = 1;
    double lambda = 1.0; // coupling in front of the noise
    int p = 2;           // moment order
    InitialCondition u0 = InitialCondition::indicator_ball(1.0);
    // Support ratio for the white-noise support condition (u0 supported in the
    // ball of radius support_ratio * support_radius).
    double support_ratio = 1.0;

    void validate() const {
        if (d < 1) throw DomainError("model requires d >= 1");
        if (!(lambda >= 0.0)) throw DomainError("model requires lambda >= 0");
        if (p < 1) throw DomainError("model requires p >= 1");
        if (!(support_ratio >= 1.0)) throw DomainError("model requires support ratio >= 1");
    }
};

} // namespace ifl
