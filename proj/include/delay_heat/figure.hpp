#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/spectral.hpp"
#include "delay_heat/trace.hpp"

namespace delay_heat {

/// Time instants drawn by default: two per delay interval over [0, 3 tau).
inline std::vector<double> default_panel_times(double tau) {
    return {0.0, 0.5 * tau, tau, 1.5 * tau, 2.0 * tau, 2.5 * tau};
}

/// Right-limit derivative of order floor(t/tau) at each instant, evaluated on
/// a uniform mesh with `intervals` intervals.
inline GridTrace right_limit_panels(const SpectralField& y0, const std::vector<double>& times, const FlowParams& p,
                                    std::size_t intervals) {
    GridTrace trace;
    trace.provenance = "right-limit-derivative";
    trace.x = uniform_mesh(y0.basis().length(), intervals);
    for (double t : times) {
        detail::require(t >= 0.0, "panel times must be non-negative");
        trace.times.push_back(t);
        trace.values.push_back(evaluate_on(right_limit_derivative(y0, t, p), trace.x));
    }
    return trace;
}

/// Index of the largest |v_i|.
inline std::size_t argmax_abs(const std::vector<double>& v) {
    detail::require(!v.empty(), "empty sample vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[best])) {
            best = i;
        }
    }
    return best;
}

/// max |v| / median |v|; a large value marks a localized spike.
inline double spike_ratio(const std::vector<double>& v) {
    detail::require(!v.empty(), "empty sample vector");
    std::vector<double> a(v.size());
    std::transform(v.begin(), v.end(), a.begin(), [](double x) { return std::abs(x); });
    const double peak = *std::max_element(a.begin(), a.end());
    const std::size_t mid = a.size() / 2;
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
    double median = a[mid];
    if (a.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    if (median == 0.0) {
        return peak == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return peak / median;
}

}  // namespace delay_heat
