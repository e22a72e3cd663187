#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "delay_heat/errors.hpp"

namespace delay_heat {

/// Composite Gauss-Legendre settings: `panels_per_unit` panels per unit of
/// interval length (at least one panel per interval), `nodes` points per panel.
struct QuadratureSpec {
    double panels_per_unit = 64.0;
    std::size_t nodes = 8;

    void validate() const {
        detail::require(nodes >= 2, "quadrature needs at least 2 nodes per panel");
        detail::require(panels_per_unit > 0.0 && std::isfinite(panels_per_unit),
                        "panels_per_unit must be positive");
    }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline GaussRule build_gauss_rule(std::size_t n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const auto order = static_cast<unsigned>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            const double p = std::legendre(order, x);
            const double pm1 = std::legendre(order - 1, x);
            dp = static_cast<double>(n) * (x * p - pm1) / (x * x - 1.0);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const double p = std::legendre(order, x);
        const double pm1 = std::legendre(order - 1, x);
        dp = static_cast<double>(n) * (x * p - pm1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.0;
    }
    return rule;
}

}  // namespace detail

/// Cached rule for `n` nodes. Thread-safe.
inline const GaussRule& gauss_rule(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, GaussRule> cache;
    detail::require(n >= 2, "quadrature needs at least 2 nodes per panel");
    std::lock_guard lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, detail::build_gauss_rule(n)).first;
    }
    return it->second;
}

/// Integrates f over a single panel [a, b].
template <class F>
double gauss_panel(F&& f, double a, double b, const GaussRule& rule) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return sum * half;
}

/// Composite rule over [a, b] with uniform panels.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
    spec.validate();
    if (b <= a) {
        return 0.0;
    }
    const auto& rule = gauss_rule(spec.nodes);
    const auto panels = static_cast<std::size_t>(
        std::max(1.0, std::ceil(spec.panels_per_unit * (b - a) - 1e-9)));
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + h * static_cast<double>(p);
        const double hi = (p + 1 == panels) ? b : lo + h;
        sum += gauss_panel(f, lo, hi, rule);
    }
    return sum;
}

/// Breakpoints on [a, b] refined geometrically toward `b` (when `toward_right`)
/// or toward `a`, starting from width `scale`, doubling until the interval is
/// covered. Used for integrands with an e^{-lambda * dist} boundary layer.
inline std::vector<double> graded_breakpoints(double a, double b, double scale, bool toward_right) {
    std::vector<double> pts;
    if (b <= a) {
        return pts;
    }
    const double len = b - a;
    if (!(scale > 0.0) || scale >= len) {
        return {a, b};
    }
    double h = scale;
    std::vector<double> offsets{0.0};
    while (h < len) {
        offsets.push_back(h);
        h *= 2.0;
    }
    offsets.push_back(len);
    pts.reserve(offsets.size());
    if (toward_right) {
        for (auto it = offsets.rbegin(); it != offsets.rend(); ++it) {
            pts.push_back(b - *it);
        }
        pts.front() = a;
    } else {
        for (double o : offsets) {
            pts.push_back(a + o);
        }
        pts.back() = b;
    }
    return pts;
}

/// Sorts, clips to [a, b] and deduplicates a breakpoint set (always keeping a and b).
inline std::vector<double> merge_breakpoints(double a, double b, std::vector<double> pts) {
    pts.push_back(a);
    pts.push_back(b);
    std::erase_if(pts, [&](double p) { return !(p >= a && p <= b); });
    std::sort(pts.begin(), pts.end());
    const double eps = 1e-14 * std::max(1.0, std::abs(b - a));
    std::vector<double> out;
    for (double p : pts) {
        if (out.empty() || p - out.back() > eps) {
            out.push_back(p);
        }
    }
    out.back() = b;
    return out;
}

/// Composite rule over consecutive breakpoint intervals; each interval is
/// further split per `spec.panels_per_unit`.
template <class F>
double integrate_pieces(F&& f, const std::vector<double>& breakpoints, const QuadratureSpec& spec = {}) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        sum += integrate(f, breakpoints[i], breakpoints[i + 1], spec);
    }
    return sum;
}

}  // namespace delay_heat
