#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "delay_heat/errors.hpp"
#include "delay_heat/spectral.hpp"

namespace delay_heat {

/// Per-mode history evaluator: (k, gamma, derivative order) -> value.
using ModeFunction = std::function<double(std::size_t k, double gamma, unsigned order)>;

enum class Interpolation { Linear = 1, Cubic = 3 };

/// The prescribed state phi on (-tau, 0), either analytic per mode (with
/// derivatives) or sampled on a uniform time grid. Endpoint evaluation at
/// gamma = -tau or 0 returns the one-sided limit from inside the interval.
class HistoryFunction {
public:
    static HistoryFunction zero(const EigenBasis& basis, double tau) {
        HistoryFunction h(basis, tau);
        h.kind_ = Kind::Zero;
        h.max_order_ = kUnbounded;
        return h;
    }

    static HistoryFunction analytic(const EigenBasis& basis, double tau, ModeFunction fn, unsigned max_order) {
        detail::require(static_cast<bool>(fn), "analytic history needs an evaluator");
        HistoryFunction h(basis, tau);
        h.kind_ = Kind::Analytic;
        h.fn_ = std::move(fn);
        h.max_order_ = max_order;
        return h;
    }

    /// phi(gamma) = field for all gamma.
    static HistoryFunction constant(const SpectralField& field, double tau) {
        auto coeffs = std::make_shared<std::vector<double>>(field.coeffs().begin(), field.coeffs().end());
        return analytic(
            field.basis(), tau,
            [coeffs](std::size_t k, double, unsigned order) { return order == 0 ? (*coeffs)[k - 1] : 0.0; },
            kUnbounded);
    }

    /// phi_k(gamma) = exp(rate_k gamma) c_k, one rate per mode.
    static HistoryFunction exponential_modes(const SpectralField& field, std::vector<double> rates, double tau) {
        detail::require(rates.size() == field.modes(), "one rate per mode required");
        auto coeffs = std::make_shared<std::vector<double>>(field.coeffs().begin(), field.coeffs().end());
        auto r = std::make_shared<std::vector<double>>(std::move(rates));
        return analytic(
            field.basis(), tau,
            [coeffs, r](std::size_t k, double gamma, unsigned order) {
                const double mu = (*r)[k - 1];
                return std::pow(mu, static_cast<double>(order)) * std::exp(mu * gamma) * (*coeffs)[k - 1];
            },
            kUnbounded);
    }

    /// phi(gamma) = exp(rate gamma) field.
    static HistoryFunction exponential(const SpectralField& field, double rate, double tau) {
        return exponential_modes(field, std::vector<double>(field.modes(), rate), tau);
    }

    /// Uniform samples at gamma_i = -tau + i tau / (n - 1), i = 0..n-1.
    static HistoryFunction grid(std::vector<SpectralField> samples, double tau, Interpolation interp = Interpolation::Linear) {
        detail::require(samples.size() >= 2, "grid history needs at least 2 samples");
        if (interp == Interpolation::Cubic) {
            detail::require(samples.size() >= 4, "cubic interpolation needs at least 4 samples");
        }
        const EigenBasis basis = samples.front().basis();
        for (const auto& s : samples) {
            detail::require(s.basis() == basis, "grid samples must share one basis");
        }
        HistoryFunction h(basis, tau);
        h.kind_ = Kind::Grid;
        h.interp_ = interp;
        h.samples_ = std::make_shared<std::vector<SpectralField>>(std::move(samples));
        h.max_order_ = 0;
        return h;
    }

    const EigenBasis& basis() const { return basis_; }
    double tau() const { return tau_; }
    bool is_zero() const { return kind_ == Kind::Zero; }
    bool is_grid() const { return kind_ == Kind::Grid; }
    unsigned max_derivative_order() const { return max_order_; }

    /// Interior sample times of a grid history (kinks of the interpolant).
    std::vector<double> knots() const {
        std::vector<double> out;
        if (kind_ == Kind::Grid) {
            const std::size_t n = samples_->size();
            for (std::size_t i = 1; i + 1 < n; ++i) {
                out.push_back(grid_time(i));
            }
        }
        return out;
    }

    double mode_value(std::size_t k, double gamma) const { return mode_derivative(k, gamma, 0); }

    double mode_derivative(std::size_t k, double gamma, unsigned order) const {
        check_gamma(gamma);
        detail::require(order <= max_order_, "history derivative order not available");
        switch (kind_) {
            case Kind::Zero:
                return 0.0;
            case Kind::Analytic:
                return fn_(k, gamma, order);
            case Kind::Grid:
                return interpolate(k, gamma);
        }
        return 0.0;
    }

    SpectralField value(double gamma) const { return derivative(gamma, 0); }

    SpectralField derivative(double gamma, unsigned order) const {
        SpectralField out(basis_);
        for (std::size_t k = 1; k <= basis_.modes(); ++k) {
            out.coeff(k) = mode_derivative(k, gamma, order);
        }
        return out;
    }

    static constexpr unsigned kUnbounded = 1u << 20;

private:
    enum class Kind { Zero, Analytic, Grid };

    HistoryFunction(const EigenBasis& basis, double tau) : basis_(basis), tau_(tau) {
        detail::require(tau > 0.0 && std::isfinite(tau), "delay must be positive");
    }

    void check_gamma(double gamma) const {
        const double slack = 1e-12 * tau_;
        detail::require(gamma >= -tau_ - slack && gamma <= slack, "history time outside [-tau, 0]");
    }

    double grid_time(std::size_t i) const {
        const double n = static_cast<double>(samples_->size() - 1);
        return -tau_ + tau_ * static_cast<double>(i) / n;
    }

    double interpolate(std::size_t k, double gamma) const {
        const auto& s = *samples_;
        const std::size_t n = s.size();
        const double h = tau_ / static_cast<double>(n - 1);
        double u = (gamma + tau_) / h;
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= n - 1) {
            i = n - 2;
        }
        if (interp_ == Interpolation::Linear) {
            const double w = u - static_cast<double>(i);
            return (1.0 - w) * s[i].coeff(k) + w * s[i + 1].coeff(k);
        }
        // Cubic Lagrange through 4 neighbouring samples, shifted inward at the ends.
        std::size_t first = (i == 0) ? 0 : i - 1;
        if (first + 3 > n - 1) {
            first = n - 4;
        }
        double sum = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
            double w = 1.0;
            for (std::size_t b = 0; b < 4; ++b) {
                if (a != b) {
                    w *= (u - static_cast<double>(first + b)) / static_cast<double>(static_cast<long>(a) - static_cast<long>(b));
                }
            }
            sum += w * s[first + a].coeff(k);
        }
        return sum;
    }

    EigenBasis basis_;
    double tau_;
    Kind kind_ = Kind::Zero;
    unsigned max_order_ = 0;
    ModeFunction fn_;
    std::shared_ptr<const std::vector<SpectralField>> samples_;
    Interpolation interp_ = Interpolation::Linear;
};

}  // namespace delay_heat
