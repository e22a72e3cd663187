#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "delay_heat/errors.hpp"

namespace delay_heat::reference {

/// Scalar delay equation u' = -lambda u + a u(t - tau), u = history on (-tau, 0), u(0) = y0.
struct ModeDDEConfig {
    double lambda = 0.0;
    double a = 1.0;
    double tau = 1.0;
    double dt = 1e-3;
    std::function<double(double)> history = [](double) { return 0.0; };
    double y0 = 1.0;

    void validate() const {
        detail::require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be non-negative");
        detail::require(tau > 0.0, "tau must be positive");
        detail::require(dt > 0.0, "dt must be positive");
        detail::require(dt <= tau / 10.0 * (1.0 + 1e-12), "dt must resolve the delay (dt <= tau/10)");
        detail::require(static_cast<bool>(history), "history evaluator required");
    }
};

/// RK4 samples with cubic Hermite dense output between them.
class ScalarTrace {
public:
    struct Step {
        double t0;
        double h;
        double u0;
        double u1;
        double d0;
        double d1;

        double eval(double theta) const {
            const double t2 = theta * theta;
            const double t3 = t2 * theta;
            const double h00 = 2 * t3 - 3 * t2 + 1;
            const double h10 = t3 - 2 * t2 + theta;
            const double h01 = -2 * t3 + 3 * t2;
            const double h11 = t3 - t2;
            return h00 * u0 + h10 * h * d0 + h01 * u1 + h11 * h * d1;
        }
    };

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<Step>& steps() const { return steps_; }

    /// Dense value at t in [0, T].
    double value_at(double t) const {
        detail::require(!steps_.empty(), "empty trace");
        detail::require(t >= 0.0 && t <= times_.back() * (1.0 + 1e-12), "time outside trace");
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        std::size_t m = (it == times_.begin()) ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
        m = std::min(m, steps_.size() - 1);
        const auto& s = steps_[m];
        return s.eval(std::clamp((t - s.t0) / s.h, 0.0, 1.0));
    }

private:
    friend ScalarTrace rk4_dde_mode(const ModeDDEConfig& cfg, double T);
    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<Step> steps_;
};

/// Method-of-steps classical RK4. Delayed values come from the history for
/// t - tau < 0 and from the Hermite interpolant of already-computed steps
/// otherwise. When dt divides tau each step reads one stored step throughout,
/// so branch switches at multiples of tau land on step boundaries.
inline ScalarTrace rk4_dde_mode(const ModeDDEConfig& cfg, double T) {
    cfg.validate();
    detail::require(T > 0.0, "horizon must be positive");
    const auto n = static_cast<std::size_t>(std::ceil(T / cfg.dt - 1e-9));
    const double dt = T / static_cast<double>(n);
    const double lag_steps = cfg.tau / dt;
    const bool aligned = std::abs(lag_steps - std::round(lag_steps)) < 1e-9 * lag_steps;
    const auto lag = static_cast<long>(std::llround(lag_steps));

    ScalarTrace out;
    out.times_.reserve(n + 1);
    out.values_.reserve(n + 1);
    out.steps_.reserve(n);
    out.times_.push_back(0.0);
    out.values_.push_back(cfg.y0);

    auto stored = [&](double s) {
        auto it = std::upper_bound(out.times_.begin(), out.times_.end(), s);
        std::size_t m = (it == out.times_.begin()) ? 0 : static_cast<std::size_t>(it - out.times_.begin()) - 1;
        m = std::min(m, out.steps_.size() - 1);
        const auto& st = out.steps_[m];
        return st.eval((s - st.t0) / st.h);
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double t0 = dt * static_cast<double>(i);
        const double u0 = out.values_.back();
        // Delayed value for a stage at offset theta * dt within this step.
        auto delayed = [&](double theta) {
            const double s = t0 + theta * dt - cfg.tau;
            if (aligned) {
                const long m = static_cast<long>(i) - lag;
                if (m < 0) {
                    return cfg.history(std::min(s, 0.0));
                }
                return out.steps_[static_cast<std::size_t>(m)].eval(theta);
            }
            return s < 0.0 ? cfg.history(s) : stored(s);
        };
        auto rhs = [&](double u, double theta) { return -cfg.lambda * u + cfg.a * delayed(theta); };
        const double k1 = rhs(u0, 0.0);
        const double k2 = rhs(u0 + 0.5 * dt * k1, 0.5);
        const double k3 = rhs(u0 + 0.5 * dt * k2, 0.5);
        const double k4 = rhs(u0 + dt * k3, 1.0);
        const double u1 = u0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        out.steps_.push_back({t0, dt, u0, u1, k1, rhs(u1, 1.0)});
        out.times_.push_back(i + 1 == n ? T : t0 + dt);
        out.values_.push_back(u1);
    }
    return out;
}

}  // namespace delay_heat::reference
