#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "delay_heat/errors.hpp"
#include "delay_heat/spectral.hpp"

namespace delay_heat::diagnostics {

/// Inclusive 1-based mode range.
struct ModeWindow {
    std::size_t first = 1;
    std::size_t last = 60;
};

/// Power-law fit |c_k| ~ k^{-q}. `estimated_order` = q - 1/2 is the usual 1-D
/// heuristic for membership in the spectral Sobolev scale; +inf when q > cap.
struct RegularityEstimate {
    double decay_exponent = 0.0;
    double estimated_order = 0.0;
    ModeWindow fit_range;
    double residual = 0.0;
    std::size_t points = 0;
    bool unbounded = false;
};

inline constexpr double kDecayCap = 50.0;

/// Least-squares fit of log|c_k| against log k on the block envelope: the
/// largest |c_k| within each run of `block` consecutive modes (zeros skipped).
/// The envelope keeps oscillating sequences such as Dirac coefficients from
/// being dragged down by near-zero entries.
inline RegularityEstimate regularity_scan(const SpectralField& field, ModeWindow window, std::size_t block = 5) {
    delay_heat::detail::require(window.first >= 1 && window.first <= window.last && window.last <= field.modes(),
                    "fit window must lie within [1, K]");
    delay_heat::detail::require(block >= 1, "block size must be positive");
    std::size_t nonzero = 0;
    for (std::size_t k = window.first; k <= window.last; ++k) {
        if (field.coeff(k) != 0.0) {
            ++nonzero;
        }
    }
    if (nonzero == 0) {
        throw UndefinedEstimate("all coefficients in the fit window are zero");
    }
    delay_heat::detail::require(nonzero >= 8, "fit window needs at least 8 nonzero coefficients");

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t start = window.first; start <= window.last; start += block) {
        const std::size_t stop = std::min(window.last, start + block - 1);
        std::size_t best = 0;
        double best_abs = 0.0;
        for (std::size_t k = start; k <= stop; ++k) {
            const double v = std::abs(field.coeff(k));
            if (v > best_abs) {
                best_abs = v;
                best = k;
            }
        }
        if (best != 0) {
            xs.push_back(std::log(static_cast<double>(best)));
            ys.push_back(std::log(best_abs));
        }
    }
    if (xs.size() < 2) {
        throw UndefinedEstimate("fewer than two envelope points to fit");
    }
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (intercept + slope * xs[i]);
        ss += r * r;
    }

    RegularityEstimate est;
    est.fit_range = window;
    est.points = xs.size();
    est.decay_exponent = -slope;
    est.residual = std::sqrt(ss / n);
    if (est.decay_exponent > kDecayCap) {
        est.unbounded = true;
        est.estimated_order = std::numeric_limits<double>::infinity();
    } else {
        est.estimated_order = est.decay_exponent - 0.5;
    }
    return est;
}

}  // namespace delay_heat::diagnostics
