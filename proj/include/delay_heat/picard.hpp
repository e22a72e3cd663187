#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/history.hpp"
#include "delay_heat/quadrature.hpp"
#include "delay_heat/spectral.hpp"
#include "delay_heat/trace.hpp"

namespace delay_heat {

namespace detail {

/// Weights (w0, w1) with integral_0^dt exp(-lambda (dt - r)) [(1 - r/dt) g0 + (r/dt) g1] dr
/// = dt (w0 g0 + w1 g1).
inline std::pair<double, double> exp_trapezoid_weights(double z) {
    if (z < 1e-4) {
        const double w0 = 0.5 - z / 3.0 + z * z / 8.0;
        const double w1 = 0.5 - z / 6.0 + z * z / 24.0;
        return {w0, w1};
    }
    const double e = std::exp(-z);
    const double w0 = (1.0 - e * (1.0 + z)) / (z * z);
    const double w1 = -std::expm1(-z) / z - w0;
    return {w0, w1};
}

}  // namespace detail

/// Neumann-series (Picard) iteration of the integral equation
///   y(t) = F(t) + a integral_tau^t e^{(t - s) Delta} y(s - tau) ds,
/// where F is the heat evolution of y0 plus the history forcing. Starts from
/// y = F and applies `n_iter` iterations on the uniform grid t_i = i dt. The
/// convolution uses the exponential trapezoid rule (kernel integrated exactly
/// against the piecewise-linear iterate), which stays accurate for stiff modes.
/// dt must divide both tau and T.
inline SolutionTrace picard_solve(const SpectralField& y0, const HistoryFunction& phi, double T, std::size_t n_iter,
                                  double dt, const FlowParams& p, const QuadratureSpec& quad = {}) {
    p.validate();
    detail::require(T > 0.0, "horizon must be positive");
    detail::require(n_iter >= 1, "need at least one iteration");
    detail::require(dt > 0.0 && dt <= p.tau / 4.0 * (1.0 + 1e-12), "time step must be in (0, tau/4]");
    detail::require(y0.basis() == phi.basis(), "initial data and history must share a basis");
    const double m_real = p.tau / dt;
    const auto delay_steps = static_cast<std::size_t>(std::llround(m_real));
    detail::require(std::abs(m_real - static_cast<double>(delay_steps)) <= 1e-9 * m_real,
                    "time step must divide the delay");
    const double n_real = T / dt;
    const auto steps = static_cast<std::size_t>(std::llround(n_real));
    detail::require(steps >= 1 && std::abs(n_real - static_cast<double>(steps)) <= 1e-9 * n_real,
                    "time step must divide the horizon");

    const EigenBasis& basis = y0.basis();
    const std::size_t K = basis.modes();
    std::vector<double> times(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        times[i] = dt * static_cast<double>(i);
    }
    times.back() = T;

    // values[k][i]
    std::vector<std::vector<double>> values(K, std::vector<double>(steps + 1));
    for (std::size_t k = 1; k <= K; ++k) {
        const double lambda = basis.eigenvalue(k);
        const double decay = std::exp(-lambda * dt);
        // H(t_i) = e^{-lambda dt} H(t_{i-1}) + a * (integral over the newly uncovered history slice);
        // nothing new enters once t >= tau.
        std::vector<double> forcing(steps + 1);
        double hist = 0.0;
        for (std::size_t i = 0; i <= steps; ++i) {
            if (i > 0) {
                hist *= decay;
                const double g0 = times[i - 1] - p.tau;
                const double g1 = std::min(times[i] - p.tau, 0.0);
                if (!phi.is_zero() && p.a != 0.0 && g1 > g0) {
                    const double t = times[i];
                    auto integrand = [&](double gamma) {
                        return std::exp(-lambda * (t - p.tau - gamma)) * phi.mode_value(k, gamma);
                    };
                    const auto pts = graded_breakpoints(g0, g1, lambda > 0.0 ? 1.0 / lambda : 0.0, true);
                    hist += p.a * integrate_pieces(integrand, pts, quad);
                }
            }
            forcing[i] = std::exp(-lambda * times[i]) * y0.coeff(k) + hist;
        }
        std::vector<double> y = forcing;
        if (p.a != 0.0) {
            const auto [w0, w1] = detail::exp_trapezoid_weights(lambda * dt);
            std::vector<double> next(steps + 1);
            for (std::size_t it = 0; it < n_iter; ++it) {
                double acc = 0.0;
                for (std::size_t i = 0; i <= steps; ++i) {
                    if (i > delay_steps) {
                        const double g0 = y[i - 1 - delay_steps];
                        const double g1 = y[i - delay_steps];
                        acc = decay * acc + p.a * dt * (w0 * g0 + w1 * g1);
                    }
                    next[i] = forcing[i] + acc;
                }
                y.swap(next);
            }
        }
        values[k - 1] = std::move(y);
    }

    SolutionTrace trace;
    trace.params = p;
    trace.provenance = "picard";
    trace.times = times;
    trace.fields.reserve(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        SpectralField f(basis);
        for (std::size_t k = 1; k <= K; ++k) {
            f.coeff(k) = values[k - 1][i];
        }
        trace.fields.push_back(std::move(f));
    }
    return trace;
}

/// Closed-form solution sampled at the given times.
inline SolutionTrace closed_form_trace(const SpectralField& y0, const HistoryFunction& phi,
                                      const std::vector<double>& times, const FlowParams& p,
                                      const QuadratureSpec& quad = {}) {
    SolutionTrace trace;
    trace.params = p;
    trace.provenance = "closed-form";
    trace.times = times;
    for (double t : times) {
        trace.fields.push_back(solve(y0, phi, t, p, quad));
    }
    trace.validate();
    return trace;
}

}  // namespace delay_heat
