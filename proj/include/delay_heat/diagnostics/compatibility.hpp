#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/history.hpp"
#include "delay_heat/spectral.hpp"

namespace delay_heat::diagnostics {

/// Share of the squared H^sigma norm carried by the upper half of the modes
/// (K/2 < k <= K). Near 1/2 or above signals a norm that keeps growing under
/// refinement; 0 for the zero field.
inline double tail_fraction(const SpectralField& f, SobolevIndex sigma) {
    const EigenBasis& basis = f.basis();
    const std::size_t half = basis.modes() / 2;
    double total = 0.0;
    double tail = 0.0;
    for (std::size_t k = 1; k <= basis.modes(); ++k) {
        const double c = f.coeff(k);
        const double w = c * c * std::pow(basis.eigenvalue(k), sigma.value);
        total += w;
        if (k > half) {
            tail += w;
        }
    }
    return total > 0.0 ? tail / total : 0.0;
}

inline constexpr double kTailThreshold = 0.25;

struct CompatibilityReport {
    unsigned r = 0;
    SobolevIndex s;
    double tol = 0.0;
    /// g_0..g_r.
    std::vector<SpectralField> g;
    /// d^k phi(0-) for k = 0..r.
    std::vector<SpectralField> endpoint_derivs;
    /// ||d^k phi(0-) - g_k|| in H^0, k = 0..r.
    std::vector<double> violations;
    /// H^0 norm of the termwise magnitudes behind g_k and d^k phi(0-): per mode
    /// S_0 = |c| + |phi(0-)|, S_k = a |d^{k-1} phi(-tau)| + lambda S_{k-1} + |d^k phi(0-)|.
    /// Rounding in the recursion is relative to this size.
    std::vector<double> scales;
    /// Tail fractions backing the regularity flags: g_k in H^{s+1}, and the
    /// history's endpoint derivatives in the spaces required by condition (1).
    std::vector<double> g_tail;
    std::vector<double> history_tail;
    bool regular_history = false;       ///< condition (1), heuristic
    bool regular_g = false;             ///< condition (2), heuristic
    bool matching_derivatives = false;  ///< condition (3)
    std::string note;

    bool all_hold() const { return regular_history && regular_g && matching_derivatives; }
    double max_violation() const {
        double m = 0.0;
        for (double v : violations) {
            m = std::max(m, v);
        }
        return m;
    }
};

/// Builds g_0 = y0, g_k = a d^{k-1} phi(-tau) + Delta g_{k-1} and compares
/// with d^k phi(0-). Condition (3) holds when every violation is at most
/// tol * max(1, scale_k). Conditions (1) and (2) are finite-K surrogates: a field
/// counts as regular in H^sigma when at most kTailThreshold of its squared
/// norm sits in the upper half of the modes.
inline CompatibilityReport compatibility_check(const SpectralField& y0, const HistoryFunction& phi,
                                               const FlowParams& p, unsigned r, double tol,
                                               SobolevIndex s = {0.0}) {
    p.validate();
    delay_heat::detail::require(tol >= 0.0, "tolerance must be non-negative");
    delay_heat::detail::require(y0.basis() == phi.basis(), "initial data and history must share a basis");
    delay_heat::detail::require(std::abs(phi.tau() - p.tau) <= 1e-12 * p.tau, "history delay mismatch");
    if (r > phi.max_derivative_order()) {
        throw InvalidArgument("order r = " + std::to_string(r) + " exceeds the history's derivative order " +
                              std::to_string(phi.max_derivative_order()));
    }
    const EigenBasis& basis = y0.basis();
    CompatibilityReport rep;
    rep.r = r;
    rep.s = s;
    rep.tol = tol;

    rep.g.push_back(y0);
    for (unsigned k = 1; k <= r; ++k) {
        SpectralField next = phi.derivative(-p.tau, k - 1);
        next *= p.a;
        const SpectralField& prev = rep.g.back();
        for (std::size_t m = 1; m <= basis.modes(); ++m) {
            next.coeff(m) -= basis.eigenvalue(m) * prev.coeff(m);
        }
        rep.g.push_back(std::move(next));
    }

    rep.matching_derivatives = true;
    std::vector<double> mags(basis.modes());
    for (unsigned k = 0; k <= r; ++k) {
        rep.endpoint_derivs.push_back(phi.derivative(0.0, k));
        const SpectralField& end = rep.endpoint_derivs.back();
        double sq = 0.0;
        for (std::size_t m = 1; m <= basis.modes(); ++m) {
            double& mag = mags[m - 1];
            mag = k == 0 ? std::abs(y0.coeff(m))
                         : std::abs(p.a * phi.mode_derivative(m, -p.tau, k - 1)) + basis.eigenvalue(m) * mag;
            const double total = mag + std::abs(end.coeff(m));
            sq += total * total;
        }
        rep.scales.push_back(std::sqrt(sq));
        const double v = hs_norm(end - rep.g[k], {0.0});
        rep.violations.push_back(v);
        if (v > tol * std::max(1.0, rep.scales.back())) {
            rep.matching_derivatives = false;
        }
    }

    rep.regular_g = true;
    for (const auto& gk : rep.g) {
        const double f = tail_fraction(gk, {s.value + 1.0});
        rep.g_tail.push_back(f);
        if (f > kTailThreshold) {
            rep.regular_g = false;
        }
    }

    // Condition (1): d^k phi(-tau) in H^s for k <= r, d^{r+1} phi(0) in H^s,
    // d^r phi(0) in H^{s+2}.
    rep.regular_history = true;
    auto check_history = [&](const SpectralField& f, double sigma) {
        const double frac = tail_fraction(f, {sigma});
        rep.history_tail.push_back(frac);
        if (frac > kTailThreshold) {
            rep.regular_history = false;
        }
    };
    for (unsigned k = 0; k <= r; ++k) {
        check_history(phi.derivative(-p.tau, k), s.value);
    }
    check_history(rep.endpoint_derivs[r], s.value + 2.0);
    rep.note = "conditions (1) and (2) are finite-mode tail-fraction heuristics";
    if (r + 1 <= phi.max_derivative_order()) {
        check_history(phi.derivative(0.0, r + 1), s.value);
    } else {
        rep.note += "; order r+1 history derivative unavailable, not checked";
    }
    return rep;
}

}  // namespace delay_heat::diagnostics
