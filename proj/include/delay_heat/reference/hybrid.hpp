#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "delay_heat/errors.hpp"
#include "delay_heat/history.hpp"
#include "delay_heat/spectral.hpp"
#include "delay_heat/trace.hpp"

namespace delay_heat::reference {

struct MeshParams {
    std::size_t nx = 400;  ///< spatial intervals on (0, L)
    std::size_t ns = 400;  ///< intervals of the delay variable s on (0, tau)
    double dt = 1.0 / 800.0;

    void validate(double tau) const {
        detail::require(nx >= 2, "need at least 2 spatial intervals");
        detail::require(ns >= 1, "need at least 1 delay interval");
        detail::require(dt > 0.0, "time step must be positive");
        detail::require(dt <= tau / static_cast<double>(ns) * (1.0 + 1e-12),
                        "transport CFL violated: dt must be <= tau/ns");
    }
};

/// y on the spatial mesh (boundary nodes included, held at 0) and the delay
/// buffer z[i][x] at s_i = i tau / ns; z[0] mirrors y.
struct HybridState {
    std::vector<double> y;
    std::vector<std::vector<double>> z;
    double t = 0.0;
};

/// Heat equation coupled to a transport equation on (0, tau) carrying the
/// delayed state:
///   y' = y_xx + a z(t, tau),   z_t + z_s = 0,   z(t, 0) = y(t),   z(0, s) = phi(-s).
/// Crank-Nicolson for y (source averaged over the step), first-order upwind for z.
class HybridSimulator {
public:
    HybridSimulator(std::vector<double> y0, const HistoryFunction& phi, MeshParams mesh, double a, double tau)
        : mesh_(mesh), a_(a), tau_(tau), length_(phi.basis().length()) {
        mesh_.validate(tau);
        detail::require(y0.size() == mesh_.nx + 1, "initial grid function needs nx + 1 nodes");
        detail::require(std::abs(phi.tau() - tau) <= 1e-12 * tau, "history delay mismatch");
        dx_ = length_ / static_cast<double>(mesh_.nx);
        ds_ = tau / static_cast<double>(mesh_.ns);

        state_.y = std::move(y0);
        state_.y.front() = 0.0;
        state_.y.back() = 0.0;
        const auto xs = uniform_mesh(length_, mesh_.nx);
        state_.z.assign(mesh_.ns + 1, std::vector<double>(mesh_.nx + 1, 0.0));
        if (!phi.is_zero()) {
            const EigenBasis& basis = phi.basis();
            std::vector<std::vector<double>> table(basis.modes(), std::vector<double>(mesh_.nx + 1));
            for (std::size_t k = 1; k <= basis.modes(); ++k) {
                for (std::size_t j = 1; j < mesh_.nx; ++j) {
                    table[k - 1][j] = basis.eigenfunction(k, xs[j]);
                }
            }
            for (std::size_t i = 1; i <= mesh_.ns; ++i) {
                const double gamma = -ds_ * static_cast<double>(i);
                for (std::size_t k = 1; k <= basis.modes(); ++k) {
                    const double c = phi.mode_value(k, std::max(gamma, -tau));
                    if (c == 0.0) {
                        continue;
                    }
                    for (std::size_t j = 1; j < mesh_.nx; ++j) {
                        state_.z[i][j] += c * table[k - 1][j];
                    }
                }
            }
        }
        state_.z[0] = state_.y;
    }

    const HybridState& state() const { return state_; }
    double dx() const { return dx_; }
    double ds() const { return ds_; }

    /// Advances by `dt` (must not exceed the mesh dt).
    void step(double dt) {
        detail::require(dt > 0.0 && dt <= mesh_.dt * (1.0 + 1e-12), "step exceeds mesh dt");
        const std::size_t nx = mesh_.nx;
        const std::size_t ns = mesh_.ns;
        const double nu = dt / ds_;
        std::vector<double> z_out_old = state_.z[ns];

        // Upwind transport, downstream first so z[i-1] is still the old value.
        for (std::size_t i = ns; i >= 1; --i) {
            auto& zi = state_.z[i];
            const auto& zm = state_.z[i - 1];
            for (std::size_t j = 0; j <= nx; ++j) {
                zi[j] -= nu * (zi[j] - zm[j]);
            }
        }
        const auto& z_out_new = state_.z[ns];

        // Crank-Nicolson: (I - r L) y1 = (I + r L) y0 + dt a (z_old + z_new)/2 on interior nodes.
        const double r = 0.5 * dt / (dx_ * dx_);
        const std::size_t m = nx - 1;
        std::vector<double> rhs(m);
        const auto& y = state_.y;
        for (std::size_t q = 0; q < m; ++q) {
            const std::size_t j = q + 1;
            rhs[q] = y[j] + r * (y[j - 1] - 2.0 * y[j] + y[j + 1]) + 0.5 * dt * a_ * (z_out_old[j] + z_out_new[j]);
        }
        // Thomas algorithm for the constant tridiagonal (-r, 1 + 2r, -r).
        std::vector<double> cprime(m);
        const double diag = 1.0 + 2.0 * r;
        cprime[0] = -r / diag;
        rhs[0] /= diag;
        for (std::size_t q = 1; q < m; ++q) {
            const double denom = diag + r * cprime[q - 1];
            cprime[q] = -r / denom;
            rhs[q] = (rhs[q] + r * rhs[q - 1]) / denom;
        }
        for (std::size_t q = m - 1; q-- > 0;) {
            rhs[q] -= cprime[q] * rhs[q + 1];
        }
        for (std::size_t q = 0; q < m; ++q) {
            state_.y[q + 1] = rhs[q];
        }
        state_.z[0] = state_.y;
        state_.t += dt;
    }

    /// Advances to time T with equal steps no larger than the mesh dt.
    void advance_to(double T) {
        const double remaining = T - state_.t;
        if (remaining <= 1e-14 * std::max(1.0, T)) {
            return;
        }
        const auto n = static_cast<std::size_t>(std::ceil(remaining / mesh_.dt - 1e-9));
        const double h = remaining / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            step(h);
        }
        state_.t = T;
    }

private:
    MeshParams mesh_;
    double a_;
    double tau_;
    double length_;
    double dx_ = 0.0;
    double ds_ = 0.0;
    HybridState state_;
};

/// Runs the hybrid system and records y at each output time (sorted, >= 0).
inline GridTrace hybrid_simulate(std::vector<double> y0, const HistoryFunction& phi, const MeshParams& mesh, double a,
                                 double tau, const std::vector<double>& output_times) {
    HybridSimulator sim(std::move(y0), phi, mesh, a, tau);
    GridTrace trace;
    trace.provenance = "hybrid";
    trace.x = uniform_mesh(phi.basis().length(), mesh.nx);
    double last = -1.0;
    for (double t : output_times) {
        detail::require(t >= 0.0 && t > last, "output times must be increasing and non-negative");
        sim.advance_to(t);
        trace.times.push_back(t);
        trace.values.push_back(sim.state().y);
        last = t;
    }
    return trace;
}

/// Samples a spectral field at the nodes of a uniform mesh with nx intervals.
inline std::vector<double> sample_field(const SpectralField& f, std::size_t nx) {
    return evaluate_on(f, uniform_mesh(f.basis().length(), nx));
}

/// Discrete L2(0, L) norm of the nodal difference (trapezoid rule; boundary values vanish).
inline double discrete_l2_error(const std::vector<double>& u, const std::vector<double>& v, double dx) {
    detail::require(u.size() == v.size(), "size mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double d = u[j] - v[j];
        sum += d * d;
    }
    return std::sqrt(sum * dx);
}

/// "t,s,x,value" dump of the delay buffer. Returns the number of data rows.
inline std::size_t write_transport_csv(std::ostream& os, const HybridState& state, double tau, double length,
                                       bool header = true) {
    if (header) {
        os << "t,s,x,value\n";
    }
    const std::size_t ns = state.z.size() - 1;
    const std::size_t nx = state.y.size() - 1;
    std::size_t rows = 0;
    for (std::size_t i = 0; i <= ns; ++i) {
        const double s = tau * static_cast<double>(i) / static_cast<double>(ns);
        for (std::size_t j = 0; j <= nx; ++j) {
            const double x = length * static_cast<double>(j) / static_cast<double>(nx);
            os << format_double(state.t) << ',' << format_double(s) << ',' << format_double(x) << ','
               << format_double(state.z[i][j]) << '\n';
            ++rows;
        }
    }
    return rows;
}

}  // namespace delay_heat::reference
