#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/diagnostics/compatibility.hpp"
#include "delay_heat/diagnostics/identity.hpp"
#include "delay_heat/diagnostics/jumps.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/history.hpp"
#include "delay_heat/picard.hpp"
#include "delay_heat/reference/hybrid.hpp"
#include "delay_heat/reference/rk4_dde.hpp"
#include "delay_heat/spectral.hpp"

namespace delay_heat::validation {

/// One checked quantity: passes when value <= threshold.
struct CheckRow {
    std::string suite;
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

inline CheckRow check(std::string suite, std::string name, double value, double threshold) {
    const bool ok = std::isfinite(value) && value <= threshold;
    return {std::move(suite), std::move(name), value, threshold, ok};
}

inline bool all_pass(const std::vector<CheckRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

inline void append(std::vector<CheckRow>& out, const std::vector<CheckRow>& more) {
    out.insert(out.end(), more.begin(), more.end());
}

inline std::string label(std::initializer_list<std::pair<const char*, double>> parts) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : parts) {
        os << (first ? "" : ";") << k << '=' << v;
        first = false;
    }
    return os.str();
}

/// Closed-form delayed exponential against RK4 method of steps (y0 = 1, zero
/// history, dt = tau/1000) on [0, 3 tau]. The error is the sup-norm relative
/// error max |u_rk4 - u| / max |u| over the RK4 grid.
inline std::vector<CheckRow> per_mode_rows(double threshold = 1e-6) {
    const double pi = std::acos(-1.0);
    std::vector<CheckRow> rows;
    for (double lambda : {0.0, pi * pi, 4.0 * pi * pi, 100.0}) {
        for (double a : {-1.0, 1.0, 2.0}) {
            for (double tau : {0.5, 1.0}) {
                reference::ModeDDEConfig cfg;
                cfg.lambda = lambda;
                cfg.a = a;
                cfg.tau = tau;
                cfg.dt = tau / 1000.0;
                cfg.y0 = 1.0;
                const auto trace = reference::rk4_dde_mode(cfg, 3.0 * tau);
                const FlowParams p{a, tau};
                double err = 0.0;
                double peak = 0.0;
                for (std::size_t i = 0; i < trace.times().size(); ++i) {
                    const double u = delayed_exp(lambda, trace.times()[i], p);
                    err = std::max(err, std::abs(u - trace.values()[i]));
                    peak = std::max(peak, std::abs(u));
                }
                rows.push_back(check("per-mode", "rk4 " + label({{"lambda", lambda}, {"a", a}, {"tau", tau}}),
                                     err / peak, threshold));
            }
        }
    }
    return rows;
}

/// lambda = 0, a = 1, tau = 1: u(0.5) = 1, u(1.5) = 1.5, u(2.5) = 1 + 1.5 + 1.5^2/2.
inline std::vector<CheckRow> spot_value_rows() {
    const FlowParams p{1.0, 1.0};
    std::vector<CheckRow> rows;
    for (auto [t, exact] : {std::pair{0.5, 1.0}, std::pair{1.5, 1.5}, std::pair{2.5, 2.625}}) {
        rows.push_back(check("per-mode", "spot " + label({{"t", t}}), std::abs(delayed_exp(0.0, t, p) - exact),
                             4.0 * std::numeric_limits<double>::epsilon() * exact));
    }
    return rows;
}

/// With a = 0 the solution is the heat semigroup.
inline std::vector<CheckRow> heat_limit_rows() {
    const EigenBasis basis(1.0, 60);
    const auto y0 = dirac_coeffs(0.3, basis);
    const FlowParams p{0.0, 1.0};
    std::vector<CheckRow> rows;
    for (double t : {0.05, 0.5, 1.5, 2.5}) {
        const auto y = solve(y0, HistoryFunction::zero(basis, 1.0), t, p);
        const auto ref = semigroup_apply(y0, t);
        rows.push_back(check("per-mode", "heat-limit " + label({{"t", t}}), hs_norm(y - ref, {0.0}),
                             1e-14 * std::max(1.0, hs_norm(ref, {0.0}))));
    }
    return rows;
}

inline std::vector<CheckRow> suite_per_mode() {
    auto rows = per_mode_rows();
    append(rows, spot_value_rows());
    append(rows, heat_limit_rows());
    return rows;
}

namespace detail {

inline double max_trace_error(const SolutionTrace& a, const SolutionTrace& b) {
    double err = 0.0;
    for (std::size_t i = 0; i < a.times.size(); ++i) {
        err = std::max(err, hs_norm(a.fields[i] - b.fields[i], {0.0}));
    }
    return err;
}

}  // namespace detail

/// Picard iterates on T = 3, a = 1, tau = 1, dt = 1/400 against the closed form.
/// Error of iterate n (L2, max over grid times) must stay below
/// max(C T^{n+1}/(n+1)!, grid_tol) with C = max_t ||y(t)||, the Neumann-series
/// bound. The grid floor is the second-order product-trapezoid error; halving
/// dt must cut the converged error by at least 3.
inline std::vector<CheckRow> suite_picard(double grid_tol = 1e-6) {
    const double T = 3.0;
    const double dt = 1.0 / 400.0;
    const FlowParams p{1.0, 1.0};
    const EigenBasis basis(1.0, 20);
    const auto y0 = project([](double x) { return x * (1.0 - x); }, basis);
    const auto phi = HistoryFunction::constant(unit_mode(basis, 1, 0.5), p.tau);

    const auto first = picard_solve(y0, phi, T, 1, dt, p);
    const auto exact = closed_form_trace(y0, phi, first.times, p);
    double C = 0.0;
    for (const auto& f : exact.fields) {
        C = std::max(C, hs_norm(f, {0.0}));
    }
    std::vector<CheckRow> rows;
    double factorial = 1.0;
    double converged = 0.0;
    for (std::size_t n = 1; n <= 6; ++n) {
        factorial *= static_cast<double>(n + 1);
        const double err = detail::max_trace_error(picard_solve(y0, phi, T, n, dt, p), exact);
        const double bound = std::max(C * std::pow(p.a * T, static_cast<double>(n + 1)) / factorial, grid_tol);
        rows.push_back(check("picard", "iterate " + label({{"n", static_cast<double>(n)}}), err, bound));
        converged = err;
    }
    rows.push_back(check("picard", "converged-to-grid-tolerance", converged, grid_tol));
    const auto fine = picard_solve(y0, phi, T, 6, 0.5 * dt, p);
    const double fine_err = detail::max_trace_error(fine, closed_form_trace(y0, phi, fine.times, p));
    rows.push_back(check("picard", "grid-refinement-gain", 3.0 * fine_err / converged, 1.0));
    return rows;
}

struct HybridStudy {
    std::vector<std::size_t> n;
    std::vector<double> errors;
    std::vector<double> orders;
};

/// Hybrid heat-transport solver on meshes (n, n, tau/(2n)), n = 100, 200, 400,
/// against the closed form at t = 2 tau. Smooth data: y0 = sin(pi x) with the
/// compatible history exp(mu gamma) y0, so the exact solution is smooth in t.
inline HybridStudy hybrid_convergence(const std::vector<std::size_t>& sizes = {100, 200, 400}) {
    const double tau = 1.0;
    const FlowParams p{1.0, tau};
    const EigenBasis basis(1.0, 1);
    const SpectralField y0(basis, {1.0 / std::sqrt(2.0)});
    const auto phi = characteristic_history(y0, p);
    const auto exact = solve(y0, phi, 2.0 * tau, p);
    HybridStudy study;
    for (std::size_t n : sizes) {
        const reference::MeshParams mesh{n, n, tau / (2.0 * static_cast<double>(n))};
        const auto trace =
            reference::hybrid_simulate(reference::sample_field(y0, n), phi, mesh, p.a, tau, {2.0 * tau});
        const double dx = basis.length() / static_cast<double>(n);
        study.n.push_back(n);
        study.errors.push_back(reference::discrete_l2_error(trace.values[0], reference::sample_field(exact, n), dx));
    }
    for (std::size_t i = 1; i < study.errors.size(); ++i) {
        study.orders.push_back(std::log2(study.errors[i - 1] / study.errors[i]));
    }
    return study;
}

inline std::vector<CheckRow> suite_hybrid() {
    const auto study = hybrid_convergence();
    std::vector<CheckRow> rows;
    for (std::size_t i = 0; i < study.orders.size(); ++i) {
        const auto n = static_cast<double>(study.n[i + 1]);
        const double q = study.orders[i];
        rows.push_back(check("hybrid", "order-low " + label({{"n", n}}), 0.8 - q, 0.0));
        rows.push_back(check("hybrid", "order-high " + label({{"n", n}}), q - 1.2, 0.0));
    }
    rows.push_back(check("hybrid", "finest-l2-error", study.errors.back(), 1e-3));
    return rows;
}

/// Weighted semigroup identity for alpha, beta in 0..3, s in {-1, 0, 2} on
/// `fields` seeded random coefficient fields (K = 60). One row per
/// (alpha, beta, s) with the worst |ratio - 1|.
inline std::vector<CheckRow> suite_identity(std::size_t fields = 20, std::uint64_t seed = 20240406) {
    const EigenBasis basis(1.0, 60);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<SpectralField> samples;
    for (std::size_t f = 0; f < fields; ++f) {
        SpectralField y(basis);
        for (std::size_t k = 1; k <= basis.modes(); ++k) {
            y.coeff(k) = normal(rng);
        }
        samples.push_back(std::move(y));
    }
    std::vector<CheckRow> rows;
    for (unsigned alpha = 0; alpha <= 3; ++alpha) {
        for (unsigned beta = 0; beta <= 3; ++beta) {
            for (double s : {-1.0, 0.0, 2.0}) {
                double worst = 0.0;
                for (const auto& y : samples) {
                    const auto rep = diagnostics::weighted_identity_check(y, {s}, alpha, beta);
                    worst = std::max(worst, rep.degenerate ? 1.0 : std::abs(rep.ratio - 1.0));
                }
                rows.push_back(check("identity",
                                     "ratio " + label({{"alpha", alpha}, {"beta", beta}, {"s", s}}), worst, 1e-6));
            }
        }
    }
    return rows;
}

/// Zero history, y0 = Dirac at 0.3 (K = 60), a in {1, 2}: the jump of the
/// j-th derivative at j tau matches a^j y0 per mode; one-sided derivatives of
/// orders 0..4 agree at the probes j tau + tau/2.
inline std::vector<CheckRow> suite_jumps(std::size_t j_max = 4) {
    const EigenBasis basis(1.0, 60);
    const auto y0 = dirac_coeffs(0.3, basis);
    std::vector<CheckRow> rows;
    for (double a : {1.0, 2.0}) {
        const FlowParams p{a, 1.0};
        const auto report = diagnostics::lattice_jump_report(y0, HistoryFunction::zero(basis, p.tau), p, j_max);
        for (const auto& r : report) {
            rows.push_back(check("jumps", "lattice " + label({{"a", a}, {"j", static_cast<double>(r.j)}}),
                                 r.max_mode_rel_error, 1e-6));
        }
        double scale = 0.0;
        for (double c : y0.coeffs()) {
            scale = std::max(scale, std::abs(c));
        }
        for (std::size_t j = 0; j <= j_max; ++j) {
            double worst = 0.0;
            for (unsigned order = 0; order <= 4; ++order) {
                const double ref = std::max(1.0, std::pow(std::abs(a), static_cast<double>(order))) * scale;
                for (std::size_t k = 1; k <= basis.modes(); ++k) {
                    const double d = measured_mode_jump(basis.eigenvalue(k), j, 0.5 * p.tau, order, p);
                    worst = std::max(worst, std::abs(d * y0.coeff(k)) / ref);
                }
            }
            rows.push_back(check("jumps", "off-lattice " + label({{"a", a}, {"t", (j + 0.5) * p.tau}}), worst, 1e-8));
        }
    }
    return rows;
}

/// Compatible history (characteristic exponentials) up to order r = 3: zero
/// violations relative to the recursion's size, all flags, and no measured
/// endpoint jumps. A unit orthonormal perturbation of phi gives violation 1.
inline std::vector<CheckRow> suite_compatibility(unsigned r = 3) {
    const EigenBasis basis(1.0, 8);
    const FlowParams p{1.0, 1.0};
    SpectralField y0(basis);
    y0.coeff(1) = 1.0;
    y0.coeff(2) = 0.5;
    y0.coeff(3) = 0.25;
    const auto phi = characteristic_history(y0, p);
    const auto rep = diagnostics::compatibility_check(y0, phi, p, r, 1e-9);
    std::vector<CheckRow> rows;
    for (unsigned k = 0; k <= r; ++k) {
        rows.push_back(check("compatibility", "relative-violation " + label({{"k", static_cast<double>(k)}}),
                             rep.violations[k] / std::max(1.0, rep.scales[k]), 1e-9));
    }
    rows.push_back(check("compatibility", "flags-all-hold", rep.all_hold() ? 0.0 : 1.0, 0.0));
    for (const auto& row : diagnostics::endpoint_jump_report(y0, phi, p, r)) {
        rows.push_back(check("compatibility",
                             "endpoint-jump " + label({{"t", row.t}, {"k", static_cast<double>(row.order)}}),
                             row.measured_norm / std::max(1.0, row.scale), 1e-6));
    }

    const auto shift = unit_mode(basis, 1);
    const auto perturbed = HistoryFunction::analytic(
        basis, p.tau,
        [phi, shift](std::size_t k, double gamma, unsigned order) {
            return phi.mode_derivative(k, gamma, order) + (order == 0 ? shift.coeff(k) : 0.0);
        },
        HistoryFunction::kUnbounded);
    const auto bad = diagnostics::compatibility_check(y0, perturbed, p, r, 1e-9);
    rows.push_back(check("compatibility", "unit-perturbation", std::abs(bad.violations[0] - 1.0), 1e-9));
    rows.push_back(check("compatibility", "unit-perturbation-detected", bad.matching_derivatives ? 1.0 : 0.0, 0.0));
    return rows;
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"per-mode", "picard", "hybrid", "identity", "jumps", "compatibility"};
    return names;
}

/// Runs one named suite or "all". Unknown names raise InvalidArgument.
inline std::vector<CheckRow> run_suite(const std::string& name) {
    if (name == "per-mode") {
        return suite_per_mode();
    }
    if (name == "picard") {
        return suite_picard();
    }
    if (name == "hybrid") {
        return suite_hybrid();
    }
    if (name == "identity") {
        return suite_identity();
    }
    if (name == "jumps") {
        return suite_jumps();
    }
    if (name == "compatibility") {
        return suite_compatibility();
    }
    if (name == "all") {
        std::vector<CheckRow> rows;
        for (const auto& n : suite_names()) {
            append(rows, run_suite(n));
        }
        return rows;
    }
    throw InvalidArgument("unknown validation suite: " + name);
}

}  // namespace delay_heat::validation
