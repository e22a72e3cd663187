#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/errors.hpp"

using namespace delay_heat;

namespace {
constexpr double pi = std::numbers::pi;
constexpr double pi2 = pi * pi;
}  // namespace

TEST(LatticePosition, SnapsNearLatticePoints) {
    auto p = lattice_position(2.0 - 1e-14, 1.0);
    EXPECT_EQ(p.index, 2u);
    EXPECT_EQ(p.offset, 0.0);
    p = lattice_position(1.25, 0.5);
    EXPECT_EQ(p.index, 2u);
    EXPECT_NEAR(p.offset, 0.25, 1e-15);
    EXPECT_THROW(lattice_position(-0.1, 1.0), InvalidArgument);
}

TEST(DelayedExp, ZeroDecayPolynomialValues) {
    const FlowParams p;
    EXPECT_DOUBLE_EQ(delayed_exp(0.0, 0.5, p), 1.0);
    EXPECT_DOUBLE_EQ(delayed_exp(0.0, 1.5, p), 1.5);
    EXPECT_DOUBLE_EQ(delayed_exp(0.0, 2.5, p), 2.625);
}

TEST(DelayedExp, ReducesToHeatBeforeDelay) {
    const FlowParams p{2.0, 1.0, 256};
    for (double t : {0.0, 0.3, 0.999}) {
        EXPECT_NEAR(delayed_exp(pi2, t, p), std::exp(-pi2 * t), 1e-15);
    }
}

TEST(DelayedExp, IndependentTwoTermValue) {
    // a = 2, tau = 0.5, lambda = 4, t = 0.8: exp(-3.2) + 2 (0.3) exp(-1.2).
    EXPECT_NEAR(delayed_exp(4.0, 0.8, {2.0, 0.5, 256}), 0.22147873112568746, 1e-15);
}

TEST(DelayedExp, ZeroCouplingIsSemigroup) {
    const FlowParams p{0.0, 1.0, 256};
    for (double t : {0.5, 1.0, 2.7, 9.0}) {
        EXPECT_NEAR(delayed_exp(3.0, t, p), std::exp(-3.0 * t), 1e-15);
    }
}

TEST(DelayedExp, ContinuousAcrossLattice) {
    const FlowParams p{1.5, 1.0, 256};
    for (std::size_t j = 1; j <= 4; ++j) {
        const double t = static_cast<double>(j);
        EXPECT_NEAR(delayed_exp(5.0, t - 1e-10, p), delayed_exp(5.0, t + 1e-10, p), 1e-8);
    }
}

TEST(DelayedExp, SatisfiesDelayEquation) {
    // u'(t) = -lambda u(t) + a u(t - tau) off the lattice, checked with the branch derivative.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const FlowParams p{-2.0 + 4.0 * ud(rng), 0.2 + ud(rng), 256};
        const double lambda = 30.0 * ud(rng);
        const double t = p.tau * (1.05 + 3.0 * ud(rng));
        const auto pos = lattice_position(t, p.tau);
        const double du = flow_branch_derivative(lambda, pos.index, pos.offset, 1, p);
        const double rhs = -lambda * delayed_exp(lambda, t, p) + p.a * delayed_exp(lambda, t - p.tau, p);
        EXPECT_NEAR(du, rhs, 1e-11 * (1.0 + std::abs(rhs)));
    }
}

TEST(DelayedExp, LargeIndexTermsStayFinite) {
    const FlowParams p{1.0, 0.01, 512};
    const double v = delayed_exp(pi2, 3.0, p);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
}

TEST(DelayedExp, TruncationGuard) {
    const FlowParams p{1.0, 0.01, 10};
    EXPECT_THROW(delayed_exp(1.0, 1.0, p), TruncationExceeded);
}

TEST(DelayedExp, RejectsBadParameters) {
    EXPECT_THROW(delayed_exp(1.0, 1.0, {1.0, 0.0, 256}), InvalidArgument);
    EXPECT_THROW(delayed_exp(1.0, -1.0, {}), InvalidArgument);
    EXPECT_THROW(delayed_exp(-1.0, 1.0, {}), InvalidArgument);
}

TEST(FlowApply, DiracModeValue) {
    const auto y0 = dirac_coeffs(0.3, EigenBasis(1.0, 4));
    const auto y = flow_apply(y0, 1.5, {});
    EXPECT_NEAR(y.coeff(1), 0.0041146244803848335, 1e-16);
}

TEST(FlowApply, ZeroInitialStaysZero) {
    EXPECT_TRUE(flow_apply(SpectralField(EigenBasis(1.0, 5)), 2.3, {}).is_zero());
}

TEST(Solve, HistoryOnlyBeforeDelay) {
    const EigenBasis basis(1.0, 2);
    const auto phi = HistoryFunction::constant(unit_mode(basis, 1), 1.0);
    const auto y = solve(SpectralField(basis), phi, 0.5, {});
    EXPECT_NEAR(y.coeff(1), (1.0 - std::exp(-0.5 * pi2)) / pi2, 1e-14);
    EXPECT_NEAR(y.coeff(2), 0.0, 1e-15);
}

TEST(Solve, HistoryOnlyAfterDelay) {
    // Independent method-of-steps integral with mpmath.
    const EigenBasis basis(1.0, 1);
    const auto phi = HistoryFunction::constant(unit_mode(basis, 1), 1.0);
    EXPECT_NEAR(solve(SpectralField(basis), phi, 1.7, {}).coeff(1), 0.010286087919151111, 1e-14);
}

TEST(Solve, ExponentialHistory) {
    const EigenBasis basis(1.0, 1);
    const auto phi = HistoryFunction::exponential(unit_mode(basis, 1), 2.0, 1.0);
    EXPECT_NEAR(solve(unit_mode(basis, 1), phi, 0.6, {}).coeff(1), 0.040505337794009072, 1e-14);
}

TEST(Solve, ZeroHistoryEqualsFlow) {
    const auto y0 = dirac_coeffs(0.3, EigenBasis(1.0, 10));
    const auto phi = HistoryFunction::zero(y0.basis(), 1.0);
    const auto a = solve(y0, phi, 2.2, {});
    const auto b = flow_apply(y0, 2.2, {});
    for (std::size_t k = 1; k <= 10; ++k) {
        EXPECT_EQ(a.coeff(k), b.coeff(k));
    }
}

TEST(Solve, CharacteristicHistoryIsExactSolution) {
    const FlowParams p{1.0, 1.0, 256};
    const EigenBasis basis(1.0, 6);
    const SpectralField y0(basis, {1.0, 0.5, 0.25, 0.1, 0.05, 0.02});
    const auto phi = characteristic_history(y0, p);
    for (double t : {0.4, 1.0, 1.7, 2.5}) {
        const auto y = solve(y0, phi, t, p);
        for (std::size_t k = 1; k <= 6; ++k) {
            const double mu = characteristic_rate(basis.eigenvalue(k), p);
            const double exact = std::exp(mu * t) * y0.coeff(k);
            EXPECT_NEAR(y.coeff(k), exact, 1e-10 * std::abs(y0.coeff(k))) << "t=" << t << " k=" << k;
        }
    }
}

TEST(Solve, LinearInInitialData) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    const EigenBasis basis(1.0, 8);
    SpectralField f(basis), g(basis);
    for (std::size_t k = 1; k <= 8; ++k) {
        f.coeff(k) = nd(rng);
        g.coeff(k) = nd(rng);
    }
    const FlowParams p{0.7, 0.8, 256};
    const auto lhs = flow_apply(2.0 * f + g, 1.9, p);
    const auto rhs = 2.0 * flow_apply(f, 1.9, p) + flow_apply(g, 1.9, p);
    for (std::size_t k = 1; k <= 8; ++k) {
        EXPECT_NEAR(lhs.coeff(k), rhs.coeff(k), 1e-14);
    }
}

TEST(Solve, BasisMismatchRejected) {
    const auto phi = HistoryFunction::zero(EigenBasis(1.0, 3), 1.0);
    EXPECT_THROW(solve(SpectralField(EigenBasis(1.0, 4)), phi, 1.0, {}), InvalidArgument);
}

TEST(CharacteristicRate, SolvesCharacteristicEquation) {
    for (double a : {0.3, 1.0, 2.0}) {
        for (double tau : {0.25, 1.0}) {
            const FlowParams p{a, tau, 256};
            for (double lambda : {0.0, pi2, 100.0, 1000.0, 35000.0}) {
                // Residual of the equivalent form ln d + tau d = ln a + lambda tau, d = mu + lambda.
                const double d = characteristic_rate(lambda, p) + lambda;
                ASSERT_GT(d, 0.0);
                const double residual = std::log(d) + tau * d - std::log(a) - lambda * tau;
                EXPECT_NEAR(residual, 0.0, 1e-12 * std::max(1.0, lambda * tau)) << a << " " << tau << " " << lambda;
            }
        }
    }
    EXPECT_THROW(characteristic_rate(1.0, {0.0, 1.0, 256}), InvalidArgument);
    EXPECT_THROW(characteristic_rate(1.0, {-1.0, 1.0, 256}), InvalidArgument);
}

TEST(RightLimitDerivative, MatchesFiniteDifference) {
    const FlowParams p;
    const auto y0 = dirac_coeffs(0.3, EigenBasis(1.0, 20));
    const double t = 1.3;
    const double h = 1e-4;
    const auto d = right_limit_derivative(y0, t, p);
    const auto fd = (1.0 / (2.0 * h)) * (flow_apply(y0, t + h, p) - flow_apply(y0, t - h, p));
    for (std::size_t k = 1; k <= 20; ++k) {
        EXPECT_NEAR(d.coeff(k), fd.coeff(k), 1e-3 * std::max(1e-3, std::abs(d.coeff(k))));
    }
}

TEST(RightLimitDerivative, OrderZeroBeforeDelay) {
    const auto y0 = dirac_coeffs(0.3, EigenBasis(1.0, 5));
    const auto d = right_limit_derivative(y0, 0.4, {});
    const auto y = flow_apply(y0, 0.4, {});
    for (std::size_t k = 1; k <= 5; ++k) {
        EXPECT_EQ(d.coeff(k), y.coeff(k));
    }
}

TEST(DerivativeJump, MatchesPowerLaw) {
    const FlowParams p{2.0, 1.0, 256};
    const auto y0 = dirac_coeffs(0.3, EigenBasis(1.0, 30));
    const auto jm = derivative_jump(y0, 3, p);
    for (std::size_t k = 1; k <= 30; ++k) {
        EXPECT_NEAR(jm.predicted.coeff(k), 8.0 * y0.coeff(k), 1e-14);
        EXPECT_NEAR(jm.measured.coeff(k), jm.predicted.coeff(k), 1e-6 * std::abs(jm.predicted.coeff(k)) + 1e-14);
    }
}

TEST(DerivativeJump, LowerOrdersAreContinuous) {
    const FlowParams p{1.0, 1.0, 256};
    for (unsigned order = 0; order < 3; ++order) {
        EXPECT_NEAR(measured_mode_jump(pi2, 3, 0.0, order, p), 0.0, 1e-8);
    }
    EXPECT_NEAR(measured_mode_jump(pi2, 3, 0.0, 3, p), 1.0, 1e-8);
}

TEST(HistoryForcing, HeatKernelBeforeDelayMatchesConvolution) {
    const EigenBasis basis(1.0, 2);
    const auto phi = HistoryFunction::exponential(unit_mode(basis, 2), 1.0, 1.0);
    const FlowParams p;
    EXPECT_NEAR(history_forcing_mode(phi, 2, 0.7, p), history_convolution_mode(phi, 2, 0.7, p), 1e-15);
}
