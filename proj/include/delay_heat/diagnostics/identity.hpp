#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "delay_heat/errors.hpp"
#include "delay_heat/quadrature.hpp"
#include "delay_heat/spectral.hpp"

namespace delay_heat::diagnostics {

struct IdentityReport {
    unsigned alpha = 0;
    unsigned beta = 0;
    SobolevIndex s;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;
};

/// Coefficients p_m (by power of t) with d^alpha/dt^alpha (t^beta e^{-lambda t}) = P(t) e^{-lambda t}:
///   P(t) = sum_{l <= min(alpha, beta)} C(alpha, l) beta!/(beta - l)! t^{beta - l} (-lambda)^{alpha - l}.
inline std::vector<double> weighted_derivative_poly(unsigned alpha, unsigned beta, double lambda) {
    std::vector<double> p(beta + 1, 0.0);
    double binom = 1.0;  // C(alpha, l)
    double falling = 1.0;  // beta! / (beta - l)!
    for (unsigned l = 0; l <= std::min(alpha, beta); ++l) {
        if (l > 0) {
            binom *= static_cast<double>(alpha - l + 1) / static_cast<double>(l);
            falling *= static_cast<double>(beta - l + 1);
        }
        const double lam_pow = std::pow(-lambda, static_cast<double>(alpha - l));
        p[beta - l] += binom * falling * lam_pow;
    }
    return p;
}

inline double eval_poly(const std::vector<double>& p, double t) {
    double v = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        v = v * t + *it;
    }
    return v;
}

/// Scalar factor integral_0^inf |d^alpha (t^beta e^{-t})|^2 dt, exactly, via
/// integral t^n e^{-2t} dt = n! / 2^{n+1}.
inline double weighted_scalar_factor(unsigned alpha, unsigned beta) {
    const auto p = weighted_derivative_poly(alpha, beta, 1.0);
    double sum = 0.0;
    for (std::size_t m = 0; m < p.size(); ++m) {
        for (std::size_t n = 0; n < p.size(); ++n) {
            const auto e = static_cast<double>(m + n);
            sum += p[m] * p[n] * std::exp(std::lgamma(e + 1.0) - (e + 1.0) * std::log(2.0));
        }
    }
    return sum;
}

/// integral_T^inf t^n e^{-c t} dt = n!/c^{n+1} e^{-cT} sum_{m<=n} (cT)^m / m!.
inline double power_exp_tail(unsigned n, double c, double T) {
    const double x = c * T;
    double term = 1.0;
    double partial = 1.0;
    for (unsigned m = 1; m <= n; ++m) {
        term *= x / static_cast<double>(m);
        partial += term;
    }
    return std::exp(std::lgamma(n + 1.0) - (n + 1.0) * std::log(c) - x) * partial;
}

/// integral_0^inf |d^alpha (t^beta e^{-lambda t})|^2 dt by composite Gauss-Legendre on
/// [0, min(t_cut, 60/lambda)] with panels no wider than 0.5/lambda, plus the
/// exact tail beyond the cut.
inline double weighted_mode_integral(unsigned alpha, unsigned beta, double lambda, double t_cut,
                                     const QuadratureSpec& quad) {
    const auto p = weighted_derivative_poly(alpha, beta, lambda);
    const double cut = std::min(t_cut, 60.0 / lambda);
    const auto panels = static_cast<std::size_t>(std::ceil(cut * lambda / 0.5));
    std::vector<double> pts(panels + 1);
    for (std::size_t i = 0; i <= panels; ++i) {
        pts[i] = cut * static_cast<double>(i) / static_cast<double>(panels);
    }
    auto integrand = [&](double t) {
        const double v = eval_poly(p, t) * std::exp(-lambda * t);
        return v * v;
    };
    double body = integrate_pieces(integrand, pts, quad);
    // Tail: expand P(t)^2 and integrate each power exactly.
    double tail = 0.0;
    for (std::size_t m = 0; m < p.size(); ++m) {
        for (std::size_t n = 0; n < p.size(); ++n) {
            if (p[m] != 0.0 && p[n] != 0.0) {
                tail += p[m] * p[n] * power_exp_tail(static_cast<unsigned>(m + n), 2.0 * lambda, cut);
            }
        }
    }
    return body + tail;
}

/// Compares integral_0^inf ||d^alpha (t^beta e^{t Delta} y0)||^2_{H^{s + 2(beta - alpha) + 1}} dt,
/// computed mode by mode in time, with the scaled norm factor * ||y0||^2_{H^s}.
inline IdentityReport weighted_identity_check(const SpectralField& y0, SobolevIndex s, unsigned alpha, unsigned beta,
                                              const QuadratureSpec& quad = {}) {
    quad.validate();
    IdentityReport rep;
    rep.alpha = alpha;
    rep.beta = beta;
    rep.s = s;
    const EigenBasis& basis = y0.basis();
    // e^{-2 lambda_1 t_cut} < 1e-14.
    const double t_cut = std::log(1e14) / (2.0 * basis.eigenvalue(1));
    const double exponent = s.value + 2.0 * (static_cast<double>(beta) - static_cast<double>(alpha)) + 1.0;
    double lhs = 0.0;
    for (std::size_t k = 1; k <= y0.modes(); ++k) {
        const double c = y0.coeff(k);
        if (c == 0.0) {
            continue;
        }
        const double lambda = basis.eigenvalue(k);
        lhs += weighted_mode_integral(alpha, beta, lambda, t_cut, quad) * c * c * std::pow(lambda, exponent);
    }
    const double norm = hs_norm(y0, s);
    rep.lhs = lhs;
    rep.rhs = weighted_scalar_factor(alpha, beta) * norm * norm;
    if (rep.rhs > 0.0) {
        rep.ratio = rep.lhs / rep.rhs;
    } else {
        rep.degenerate = true;
    }
    return rep;
}

}  // namespace delay_heat::diagnostics
