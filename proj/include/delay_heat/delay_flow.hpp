#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <string>
#include <vector>

#include "delay_heat/errors.hpp"
#include "delay_heat/history.hpp"
#include "delay_heat/quadrature.hpp"
#include "delay_heat/spectral.hpp"

namespace delay_heat {

/// Coupling `a`, delay `tau` and the largest lattice index the flow series may
/// use. The series is finite at every fixed t, so `max_terms` is a guard.
struct FlowParams {
    double a = 1.0;
    double tau = 1.0;
    std::size_t max_terms = 256;

    void validate() const {
        detail::require(tau > 0.0 && std::isfinite(tau), "delay tau must be positive");
        detail::require(std::isfinite(a), "coupling a must be finite");
    }
};

/// t = index * tau + offset with 0 <= offset < tau, snapped to the lattice when
/// within 1e-12 tau of a lattice point.
struct LatticePosition {
    std::size_t index;
    double offset;
};

inline LatticePosition lattice_position(double t, double tau) {
    detail::require(t >= 0.0, "time must be non-negative");
    double q = std::floor(t / tau);
    double offset = t - q * tau;
    const double snap = 1e-12 * tau;
    if (offset < 0.0) {
        q -= 1.0;
        offset += tau;
    }
    if (tau - offset <= snap) {
        q += 1.0;
        offset = 0.0;
    } else if (offset <= snap) {
        offset = 0.0;
    }
    return {static_cast<std::size_t>(q), offset};
}

namespace detail {

inline double log_binomial(unsigned n, unsigned l) {
    return std::lgamma(n + 1.0) - std::lgamma(l + 1.0) - std::lgamma(n - l + 1.0);
}

/// n-th derivative in s of (a^j / j!) s^j exp(-lambda s) at s >= 0, using 0^0 = 1:
///   a^j sum_{l=0}^{min(n,j)} C(n,l) s^{j-l}/(j-l)! (-lambda)^{n-l} exp(-lambda s).
inline double flow_term_derivative(double lambda, double a, std::size_t j, double s, unsigned n) {
    if (j > 0 && a == 0.0) {
        return 0.0;
    }
    const std::size_t lmax = std::min<std::size_t>(n, j);
    const bool log_space = j > 20;
    double sum = 0.0;
    for (std::size_t l = 0; l <= lmax; ++l) {
        const std::size_t poly = j - l;
        const unsigned dexp = n - static_cast<unsigned>(l);
        if (poly > 0 && s == 0.0) {
            continue;
        }
        if (dexp > 0 && lambda == 0.0) {
            continue;
        }
        const bool negative = (dexp % 2 == 1) != (a < 0.0 && j % 2 == 1);
        if (log_space) {
            double lg = static_cast<double>(j) * std::log(std::abs(a)) + log_binomial(n, static_cast<unsigned>(l)) -
                        std::lgamma(static_cast<double>(poly) + 1.0) - lambda * s;
            if (poly > 0) {
                lg += static_cast<double>(poly) * std::log(s);
            }
            if (dexp > 0) {
                lg += static_cast<double>(dexp) * std::log(lambda);
            }
            const double mag = std::exp(lg);
            sum += negative ? -mag : mag;
        } else {
            // binomial, s^poly / poly! and lambda^dexp by plain products (small j, n here).
            double v = std::pow(std::abs(a), static_cast<double>(j)) * std::exp(-lambda * s);
            for (std::size_t i = 1; i <= l; ++i) {
                v *= static_cast<double>(n - l + i) / static_cast<double>(i);
            }
            for (std::size_t i = 1; i <= poly; ++i) {
                v *= s / static_cast<double>(i);
            }
            for (unsigned i = 0; i < dexp; ++i) {
                v *= lambda;
            }
            sum += negative ? -v : v;
        }
    }
    return sum;
}

inline void check_terms(std::size_t highest, const FlowParams& p) {
    if (highest > p.max_terms) {
        throw TruncationExceeded("flow series needs lattice index " + std::to_string(highest) +
                                 " > max_terms " + std::to_string(p.max_terms));
    }
}

}  // namespace detail

/// `order`-th time derivative of the per-mode flow at t = anchor * tau + offset.
/// A negative offset evaluates the branch left of the lattice point; offset 0
/// gives the right limit. Before t = 0 the flow is zero.
inline double flow_branch_derivative(double lambda, std::size_t anchor, double offset, unsigned order,
                                     const FlowParams& p) {
    p.validate();
    std::size_t highest = anchor;
    if (offset < 0.0) {
        if (anchor == 0) {
            return 0.0;
        }
        highest = anchor - 1;
    }
    detail::check_terms(highest, p);
    double sum = 0.0;
    for (std::size_t j = 0; j <= highest; ++j) {
        const double s = static_cast<double>(anchor - j) * p.tau + offset;
        sum += detail::flow_term_derivative(lambda, p.a, j, std::max(s, 0.0), order);
    }
    return sum;
}

/// Per-mode action of the delayed-exponential flow:
///   sum_{j=0}^{floor(t/tau)} (a^j / j!) (t - j tau)^j exp(-lambda (t - j tau)).
inline double delayed_exp(double lambda, double t, const FlowParams& p) {
    p.validate();
    detail::require(t >= 0.0, "time must be non-negative");
    detail::require(lambda >= 0.0, "decay rate must be non-negative");
    const auto pos = lattice_position(t, p.tau);
    return flow_branch_derivative(lambda, pos.index, pos.offset, 0, p);
}

inline SpectralField flow_apply(const SpectralField& y0, double t, const FlowParams& p) {
    detail::require(t >= 0.0, "time must be non-negative");
    SpectralField out = y0;
    for (std::size_t k = 1; k <= y0.modes(); ++k) {
        out.coeff(k) *= delayed_exp(y0.basis().eigenvalue(k), t, p);
    }
    return out;
}

namespace detail {

/// a * integral over (-tau, min(t - tau, 0)) of kernel(t - tau - gamma) phi_k(gamma).
/// The kernel is smooth except at lattice points of its argument (where it may
/// kink) and has an exp(-lambda * (arg - j tau)) layer just above each one, so the
/// interval is split at every crossing and graded toward it on the 1/lambda scale.
template <class Kernel>
double convolve_history(const HistoryFunction& phi, std::size_t k, double t, double a, double tau, Kernel&& kernel,
                        const QuadratureSpec& quad) {
    require(t >= 0.0, "time must be non-negative");
    if (phi.is_zero() || a == 0.0) {
        return 0.0;
    }
    const double lo = -tau;
    const double hi = std::min(t - tau, 0.0);
    if (hi <= lo) {
        return 0.0;
    }
    const double lambda = phi.basis().eigenvalue(k);
    const double scale = lambda > 0.0 ? 1.0 / lambda : 0.0;

    // Crossings gamma_j = t - tau - j tau, j = 0, 1, ...
    std::vector<double> crossings;
    for (std::size_t j = 0;; ++j) {
        const double g = t - tau - static_cast<double>(j) * tau;
        if (g <= lo) {
            break;
        }
        crossings.push_back(g);
    }
    std::vector<double> pts = phi.knots();
    pts.insert(pts.end(), crossings.begin(), crossings.end());
    const auto base = merge_breakpoints(lo, hi, pts);

    std::vector<double> fine;
    for (std::size_t i = 0; i + 1 < base.size(); ++i) {
        const double right = base[i + 1];
        double anchor = crossings.front();
        for (double g : crossings) {
            if (g >= right - 1e-15 * tau) {
                anchor = std::min(anchor, g);
            }
        }
        const double gap = std::max(anchor - right, 0.0);
        if (scale > 0.0 && gap < 40.0 * scale) {
            const auto g = graded_breakpoints(base[i], right, scale, true);
            fine.insert(fine.end(), g.begin(), g.end());
        } else {
            fine.push_back(base[i]);
            fine.push_back(right);
        }
    }
    fine = merge_breakpoints(lo, hi, fine);

    auto integrand = [&](double gamma) { return kernel(std::max(t - tau - gamma, 0.0)) * phi.mode_value(k, gamma); };
    return a * integrate_pieces(integrand, fine, quad);
}

}  // namespace detail

/// a * integral over (-tau, min(t - tau, 0)) of delayed_exp(lambda_k, t - tau - gamma) phi_k(gamma),
/// for one mode.
inline double history_convolution_mode(const HistoryFunction& phi, std::size_t k, double t, const FlowParams& p,
                                       const QuadratureSpec& quad = {}) {
    p.validate();
    const double lambda = phi.basis().eigenvalue(k);
    auto kernel = [&](double arg) {
        const auto pos = lattice_position(arg, p.tau);
        return flow_branch_derivative(lambda, pos.index, pos.offset, 0, p);
    };
    return detail::convolve_history(phi, k, t, p.a, p.tau, kernel, quad);
}

/// Same integral with the plain heat kernel exp(-lambda_k u) in place of the
/// flow: the history forcing of the pure-heat integral equation.
inline double history_forcing_mode(const HistoryFunction& phi, std::size_t k, double t, const FlowParams& p,
                                   const QuadratureSpec& quad = {}) {
    p.validate();
    const double lambda = phi.basis().eigenvalue(k);
    auto kernel = [&](double arg) { return std::exp(-lambda * arg); };
    return detail::convolve_history(phi, k, t, p.a, p.tau, kernel, quad);
}

inline SpectralField history_convolution(const HistoryFunction& phi, double t, const FlowParams& p,
                                         const QuadratureSpec& quad = {}) {
    detail::require(t >= 0.0, "time must be non-negative");
    SpectralField out(phi.basis());
    if (phi.is_zero()) {
        return out;
    }
    for (std::size_t k = 1; k <= out.modes(); ++k) {
        out.coeff(k) = history_convolution_mode(phi, k, t, p, quad);
    }
    return out;
}

/// Variation-of-constants solution: flow of y0 plus the history convolution.
inline SpectralField solve(const SpectralField& y0, const HistoryFunction& phi, double t, const FlowParams& p,
                           const QuadratureSpec& quad = {}) {
    detail::require(y0.basis() == phi.basis(), "initial data and history must share a basis");
    SpectralField out = flow_apply(y0, t, p);
    if (!phi.is_zero()) {
        out += history_convolution(phi, t, p, quad);
    }
    return out;
}

/// Single-mode solution value at time t.
inline double solve_mode(double c0, const HistoryFunction& phi, std::size_t k, double t, const FlowParams& p,
                         const QuadratureSpec& quad = {}) {
    const double lambda = phi.basis().eigenvalue(k);
    return delayed_exp(lambda, t, p) * c0 + history_convolution_mode(phi, k, t, p, quad);
}

/// The floor(t/tau)-th right time derivative of the zero-history flow of y0.
inline SpectralField right_limit_derivative(const SpectralField& y0, double t, const FlowParams& p) {
    p.validate();
    detail::require(t >= 0.0, "time must be non-negative");
    const auto pos = lattice_position(t, p.tau);
    SpectralField out = y0;
    for (std::size_t k = 1; k <= y0.modes(); ++k) {
        out.coeff(k) *= flow_branch_derivative(y0.basis().eigenvalue(k), pos.index, pos.offset,
                                               static_cast<unsigned>(pos.index), p);
    }
    return out;
}

struct JumpMeasurement {
    SpectralField predicted;
    SpectralField measured;
};

namespace detail {

/// Polynomial (Neville) extrapolation to h = 0 of samples f(h_i).
inline double extrapolate_to_zero(const std::vector<double>& h, std::vector<double> f) {
    const std::size_t n = h.size();
    for (std::size_t m = 1; m < n; ++m) {
        for (std::size_t i = 0; i + m < n; ++i) {
            f[i] = (h[i + m] * f[i] - h[i] * f[i + 1]) / (h[i + m] - h[i]);
        }
    }
    return f[0];
}

}  // namespace detail

/// Right-minus-left limit of the `order`-th derivative of the per-mode flow at
/// t = anchor * tau + offset: analytic derivatives of each branch at t +/- eps,
/// extrapolated eps -> 0 over eps_m = eps0 / 2^m, eps0 = min(1e-3, 0.02 / lambda).
inline double measured_mode_jump(double lambda, std::size_t anchor, double offset, unsigned order,
                                 const FlowParams& p) {
    double eps0 = lambda > 0.0 ? std::min(1e-3, 0.02 / lambda) : 1e-3;
    if (offset > 0.0) {
        eps0 = std::min(eps0, 0.25 * std::min(offset, p.tau - offset));
    }
    constexpr std::size_t levels = 8;
    std::vector<double> h(levels);
    std::vector<double> d(levels);
    for (std::size_t m = 0; m < levels; ++m) {
        h[m] = eps0 / static_cast<double>(1u << m);
        d[m] = flow_branch_derivative(lambda, anchor, offset + h[m], order, p) -
               flow_branch_derivative(lambda, anchor, offset - h[m], order, p);
    }
    return detail::extrapolate_to_zero(h, d);
}

inline JumpMeasurement derivative_jump(const SpectralField& y0, std::size_t j, const FlowParams& p) {
    p.validate();
    detail::check_terms(j, p);
    JumpMeasurement out{y0, y0};
    const double scale = std::pow(p.a, static_cast<double>(j));
    for (std::size_t k = 1; k <= y0.modes(); ++k) {
        out.predicted.coeff(k) = scale * y0.coeff(k);
        out.measured.coeff(k) =
            measured_mode_jump(y0.basis().eigenvalue(k), j, 0.0, static_cast<unsigned>(j), p) * y0.coeff(k);
    }
    return out;
}

/// Real root mu of mu = -lambda + a exp(-mu tau): exp(mu t) is then an exact
/// solution of the per-mode delay equation. Requires a > 0 (unique root).
/// Solved for d = mu + lambda > 0 from ln d + tau d = ln a + lambda tau, which
/// stays well scaled for stiff modes.
inline double characteristic_rate(double lambda, const FlowParams& p) {
    p.validate();
    detail::require(p.a > 0.0, "characteristic history requires a > 0");
    detail::require(lambda >= 0.0, "eigenvalue must be non-negative");
    const double rhs = std::log(p.a) + lambda * p.tau;
    auto g = [&](double d) { return std::log(d) + p.tau * d - rhs; };
    // g is increasing; g(lo) < 0 and g(hi) > 0.
    double lo = 1e-300;
    double hi = std::max(1.0, (std::abs(std::log(p.a)) + lambda * p.tau + 1.0) / p.tau);
    double d = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        const double v = g(d);
        if (v > 0.0) {
            hi = d;
        } else {
            lo = d;
        }
        double next = d - v / (1.0 / d + p.tau);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        const bool done = std::abs(next - d) <= 4.0 * std::numeric_limits<double>::epsilon() * d;
        d = next;
        if (done || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            break;
        }
    }
    return d - lambda;
}

/// History phi_k(gamma) = exp(mu_k gamma) c_k with mu_k the characteristic rate
/// of mode k: compatible with y0 at every order.
inline HistoryFunction characteristic_history(const SpectralField& y0, const FlowParams& p) {
    std::vector<double> rates(y0.modes());
    for (std::size_t k = 1; k <= y0.modes(); ++k) {
        rates[k - 1] = characteristic_rate(y0.basis().eigenvalue(k), p);
    }
    return HistoryFunction::exponential_modes(y0, std::move(rates), p.tau);
}

}  // namespace delay_heat
