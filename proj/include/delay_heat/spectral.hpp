#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "delay_heat/errors.hpp"
#include "delay_heat/quadrature.hpp"

namespace delay_heat {

/// Dirichlet eigenbasis of -d²/dx² on (0, L), truncated to `modes` terms.
/// Mode indices are 1-based throughout.
class EigenBasis {
public:
    EigenBasis(double length, std::size_t modes) : length_(length), modes_(modes) {
        detail::require(length > 0.0 && std::isfinite(length), "domain length must be positive");
        detail::require(modes >= 1, "basis needs at least one mode");
    }

    double length() const { return length_; }
    std::size_t modes() const { return modes_; }

    double eigenvalue(std::size_t k) const {
        const double w = static_cast<double>(k) * std::numbers::pi / length_;
        return w * w;
    }

    double eigenfunction(std::size_t k, double x) const {
        return std::sqrt(2.0 / length_) * std::sin(static_cast<double>(k) * std::numbers::pi * x / length_);
    }

    bool operator==(const EigenBasis&) const = default;

private:
    double length_;
    std::size_t modes_;
};

/// x -> sqrt(2/L) sin(k pi x / L).
struct Eigenfunction {
    std::size_t k;
    double length;

    double operator()(double x) const {
        return std::sqrt(2.0 / length) * std::sin(static_cast<double>(k) * std::numbers::pi * x / length);
    }
};

struct Eigenpair {
    double eigenvalue;
    Eigenfunction eigenfunction;
};

inline Eigenpair eigenpair(std::size_t k, double length) {
    detail::require(k >= 1, "mode index must be >= 1");
    detail::require(length > 0.0 && std::isfinite(length), "domain length must be positive");
    const double w = static_cast<double>(k) * std::numbers::pi / length;
    return {w * w, Eigenfunction{k, length}};
}

/// Exponent of the spectral Sobolev scale sum |c_k|^2 lambda_k^s.
struct SobolevIndex {
    double value = 0.0;
};

/// A function on (0, L) held as sine-basis coefficients c_1..c_K.
class SpectralField {
public:
    explicit SpectralField(EigenBasis basis) : basis_(basis), coeffs_(basis.modes(), 0.0) {}

    SpectralField(EigenBasis basis, std::vector<double> coeffs) : basis_(basis), coeffs_(std::move(coeffs)) {
        detail::require(coeffs_.size() == basis_.modes(), "coefficient count must equal basis size");
        for (double c : coeffs_) {
            detail::require(std::isfinite(c), "spectral coefficients must be finite");
        }
    }

    const EigenBasis& basis() const { return basis_; }
    std::size_t modes() const { return coeffs_.size(); }
    std::span<const double> coeffs() const { return coeffs_; }

    /// 1-based mode access.
    double coeff(std::size_t k) const { return coeffs_.at(k - 1); }
    double& coeff(std::size_t k) { return coeffs_.at(k - 1); }

    bool is_zero() const {
        for (double c : coeffs_) {
            if (c != 0.0) {
                return false;
            }
        }
        return true;
    }

    SpectralField& operator+=(const SpectralField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
            coeffs_[i] += o.coeffs_[i];
        }
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
            coeffs_[i] -= o.coeffs_[i];
        }
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (double& c : coeffs_) {
            c *= s;
        }
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

private:
    void check_compatible(const SpectralField& o) const {
        detail::require(basis_ == o.basis_, "fields live on different bases");
    }

    EigenBasis basis_;
    std::vector<double> coeffs_;
};

/// Field with a single unit coefficient at mode k.
inline SpectralField unit_mode(const EigenBasis& basis, std::size_t k, double value = 1.0) {
    detail::require(k >= 1 && k <= basis.modes(), "mode index out of range");
    SpectralField f(basis);
    f.coeff(k) = value;
    return f;
}

/// c_k = integral of f e_k over (0, L) by composite Gauss-Legendre.
template <class F>
SpectralField project(F&& f, const EigenBasis& basis, const QuadratureSpec& quad = {}) {
    quad.validate();
    const double L = basis.length();
    const auto& rule = gauss_rule(quad.nodes);
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(quad.panels_per_unit * L - 1e-9)));
    const double h = L / static_cast<double>(panels);

    // Sample f once per node, then accumulate all modes.
    std::vector<double> coeffs(basis.modes(), 0.0);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = h * (static_cast<double>(p) + 0.5);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double x = mid + 0.5 * h * rule.nodes[i];
            const double wf = 0.5 * h * rule.weights[i] * f(x);
            for (std::size_t k = 1; k <= basis.modes(); ++k) {
                coeffs[k - 1] += wf * basis.eigenfunction(k, x);
            }
        }
    }
    return SpectralField(basis, std::move(coeffs));
}

inline double evaluate(const SpectralField& field, double x) {
    const auto& basis = field.basis();
    detail::require(x >= 0.0 && x <= basis.length(), "evaluation point outside [0, L]");
    if (x == 0.0 || x == basis.length()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t k = 1; k <= field.modes(); ++k) {
        sum += field.coeff(k) * basis.eigenfunction(k, x);
    }
    return sum;
}

/// Heat semigroup: c_k -> c_k exp(-lambda_k t).
inline SpectralField semigroup_apply(const SpectralField& field, double t) {
    detail::require(t >= 0.0, "semigroup time must be non-negative");
    SpectralField out = field;
    for (std::size_t k = 1; k <= field.modes(); ++k) {
        out.coeff(k) *= std::exp(-field.basis().eigenvalue(k) * t);
    }
    return out;
}

/// sqrt(sum c_k^2 lambda_k^s).
inline double hs_norm(const SpectralField& field, SobolevIndex s) {
    double sum = 0.0;
    for (std::size_t k = 1; k <= field.modes(); ++k) {
        const double c = field.coeff(k);
        if (c != 0.0) {
            sum += c * c * std::pow(field.basis().eigenvalue(k), s.value);
        }
    }
    return std::sqrt(sum);
}

/// Coefficients of the Dirac measure at x0: c_k = e_k(x0).
inline SpectralField dirac_coeffs(double x0, const EigenBasis& basis) {
    detail::require(x0 > 0.0 && x0 < basis.length(), "Dirac location must be interior");
    SpectralField f(basis);
    for (std::size_t k = 1; k <= basis.modes(); ++k) {
        f.coeff(k) = basis.eigenfunction(k, x0);
    }
    return f;
}

/// Uniform mesh x_i = i L / n, i = 0..n.
inline std::vector<double> uniform_mesh(double length, std::size_t intervals) {
    detail::require(intervals >= 1, "mesh needs at least one interval");
    std::vector<double> x(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        x[i] = length * static_cast<double>(i) / static_cast<double>(intervals);
    }
    x.back() = length;
    return x;
}

inline std::vector<double> evaluate_on(const SpectralField& field, std::span<const double> xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) {
        out.push_back(evaluate(field, x));
    }
    return out;
}

}  // namespace delay_heat
