#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/history.hpp"
#include "delay_heat/spectral.hpp"

namespace delay_heat::diagnostics {

struct JumpRow {
    std::size_t j = 0;
    double predicted_norm = 0.0;
    double measured_norm = 0.0;
    /// ||measured - predicted|| / ||predicted|| in L2.
    double rel_error = 0.0;
    /// Largest per-mode |measured - predicted| / |predicted| over modes with
    /// |predicted| above 1e-12 of the largest.
    double max_mode_rel_error = 0.0;
    /// Largest per-mode |right - left| of the j-th derivative at j tau + tau/2,
    /// relative to max_k |a^j c_k|.
    double off_lattice_difference = 0.0;
};

inline double max_mode_relative_error(const SpectralField& measured, const SpectralField& predicted) {
    double peak = 0.0;
    for (double c : predicted.coeffs()) {
        peak = std::max(peak, std::abs(c));
    }
    double worst = 0.0;
    for (std::size_t k = 1; k <= predicted.modes(); ++k) {
        const double p = predicted.coeff(k);
        if (std::abs(p) <= 1e-12 * peak) {
            continue;
        }
        worst = std::max(worst, std::abs(measured.coeff(k) - p) / std::abs(p));
    }
    return worst;
}

/// For zero history: the jump of the j-th time derivative at t = j tau for
/// j = 0..j_max, its predicted value a^j y0, and an off-lattice no-jump probe.
inline std::vector<JumpRow> lattice_jump_report(const SpectralField& y0, const HistoryFunction& phi,
                                                const FlowParams& p, std::size_t j_max) {
    p.validate();
    if (!phi.is_zero()) {
        throw UnsupportedConfiguration("lattice jump report is defined for zero history; use endpoint_jump_report");
    }
    std::vector<JumpRow> rows;
    for (std::size_t j = 0; j <= j_max; ++j) {
        const auto jm = derivative_jump(y0, j, p);
        JumpRow row;
        row.j = j;
        row.predicted_norm = hs_norm(jm.predicted, {0.0});
        row.measured_norm = hs_norm(jm.measured, {0.0});
        row.rel_error = row.predicted_norm > 0.0 ? hs_norm(jm.measured - jm.predicted, {0.0}) / row.predicted_norm : 0.0;
        row.max_mode_rel_error = max_mode_relative_error(jm.measured, jm.predicted);

        double scale = 0.0;
        for (double c : jm.predicted.coeffs()) {
            scale = std::max(scale, std::abs(c));
        }
        double probe = 0.0;
        for (std::size_t k = 1; k <= y0.modes(); ++k) {
            const double d = measured_mode_jump(y0.basis().eigenvalue(k), j, 0.5 * p.tau, static_cast<unsigned>(j), p);
            probe = std::max(probe, std::abs(d * y0.coeff(k)));
        }
        row.off_lattice_difference = scale > 0.0 ? probe / scale : probe;
        rows.push_back(row);
    }
    return rows;
}

namespace detail {

/// Finite-difference weights for the `order`-th derivative at x0 from the
/// given nodes (Fornberg's recursion).
inline std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, unsigned order) {
    const std::size_t n = nodes.size();
    const std::size_t m = order;
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k) {
                    c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k) {
                c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = c[i][m];
    }
    return w;
}

/// One-sided derivative of f at t0 from nodes t0 + side * i * h, i = 0..order+8.
template <class F>
double one_sided_derivative(F&& f, double t0, unsigned order, double h, int side) {
    const std::size_t count = order + 9;
    std::vector<double> nodes(count);
    for (std::size_t i = 0; i < count; ++i) {
        nodes[i] = static_cast<double>(side) * static_cast<double>(i);
    }
    const auto w = fd_weights(0.0, nodes, order);
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        sum += w[i] * f(t0 + nodes[i] * h);
    }
    return sum / std::pow(h, static_cast<double>(order));
}

}  // namespace detail

struct EndpointJumpRow {
    double t = 0.0;
    unsigned order = 0;
    double predicted_norm = 0.0;
    double measured_norm = 0.0;
    double abs_error = 0.0;
    /// Size of the terms that make up the jump (see compatibility_check's
    /// scales); finite-difference noise is relative to it.
    double scale = 0.0;
};

/// Jumps of the k-th time derivative (k = 0..r) at t = 0 and t = tau for a
/// history with analytic derivatives. Measured values are one-sided finite
/// differences of the closed-form solution (step min(tau/40, 0.2/lambda_k));
/// the left side at t = 0 is the history's own derivative. Predicted values
/// follow from differentiating the equation:
///   J0_k = g_k - d^k phi(0-),  Jtau_0 = 0,  Jtau_k = -lambda Jtau_{k-1} + a J0_{k-1}.
inline std::vector<EndpointJumpRow> endpoint_jump_report(const SpectralField& y0, const HistoryFunction& phi,
                                                         const FlowParams& p, unsigned r,
                                                         const QuadratureSpec& quad = {}) {
    p.validate();
    delay_heat::detail::require(r <= phi.max_derivative_order(), "history derivative order below requested r");
    delay_heat::detail::require(std::abs(phi.tau() - p.tau) <= 1e-12 * p.tau, "history delay mismatch");
    const EigenBasis& basis = y0.basis();
    const std::size_t K = basis.modes();

    std::vector<SpectralField> pred0(r + 1, SpectralField(basis));
    std::vector<SpectralField> predtau(r + 1, SpectralField(basis));
    std::vector<SpectralField> meas0(r + 1, SpectralField(basis));
    std::vector<SpectralField> meastau(r + 1, SpectralField(basis));
    std::vector<SpectralField> mags(r + 1, SpectralField(basis));

    for (std::size_t k = 1; k <= K; ++k) {
        const double lambda = basis.eigenvalue(k);
        const double c = y0.coeff(k);
        // g recursion per mode.
        std::vector<double> g(r + 1);
        g[0] = c;
        for (unsigned q = 1; q <= r; ++q) {
            g[q] = p.a * phi.mode_derivative(k, -p.tau, q - 1) - lambda * g[q - 1];
        }
        std::vector<double> j0(r + 1), jt(r + 1);
        double mag = 0.0;
        for (unsigned q = 0; q <= r; ++q) {
            mag = q == 0 ? std::abs(c) : std::abs(p.a * phi.mode_derivative(k, -p.tau, q - 1)) + lambda * mag;
            mags[q].coeff(k) = mag + std::abs(phi.mode_derivative(k, 0.0, q));
            j0[q] = g[q] - phi.mode_derivative(k, 0.0, q);
            jt[q] = q == 0 ? 0.0 : -lambda * jt[q - 1] + p.a * j0[q - 1];
            pred0[q].coeff(k) = j0[q];
            predtau[q].coeff(k) = jt[q];
        }

        auto sol = [&](double t) {
            if (t < 0.0) {
                return phi.mode_value(k, std::max(t, -p.tau));
            }
            return solve_mode(c, phi, k, t, p, quad);
        };
        const double h = std::min(p.tau / 40.0, lambda > 0.0 ? 0.2 / lambda : p.tau / 40.0);
        for (unsigned q = 0; q <= r; ++q) {
            const double r0 = detail::one_sided_derivative(sol, 0.0, q, h, +1);
            const double l0 = phi.mode_derivative(k, 0.0, q);
            const double rt = detail::one_sided_derivative(sol, p.tau, q, h, +1);
            const double lt = detail::one_sided_derivative(sol, p.tau, q, h, -1);
            meas0[q].coeff(k) = r0 - l0;
            meastau[q].coeff(k) = rt - lt;
        }
    }

    std::vector<EndpointJumpRow> rows;
    auto push = [&](double t, unsigned q, const SpectralField& pred, const SpectralField& meas, const SpectralField& mag) {
        EndpointJumpRow row;
        row.t = t;
        row.order = q;
        row.predicted_norm = hs_norm(pred, {0.0});
        row.measured_norm = hs_norm(meas, {0.0});
        row.abs_error = hs_norm(meas - pred, {0.0});
        row.scale = hs_norm(mag, {0.0});
        rows.push_back(row);
    };
    for (unsigned q = 0; q <= r; ++q) {
        push(0.0, q, pred0[q], meas0[q], mags[q]);
    }
    for (unsigned q = 0; q <= r; ++q) {
        push(p.tau, q, predtau[q], meastau[q], mags[q]);
    }
    return rows;
}

}  // namespace delay_heat::diagnostics
