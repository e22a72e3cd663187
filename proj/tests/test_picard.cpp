#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "delay_heat/errors.hpp"
#include "delay_heat/picard.hpp"

using namespace delay_heat;

namespace {

double max_error(const SolutionTrace& a, const SolutionTrace& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.times.size(); ++i) {
        worst = std::max(worst, hs_norm(a.fields[i] - b.fields[i], {0.0}));
    }
    return worst;
}

}  // namespace

TEST(Picard, ZeroCouplingExactAfterOneIteration) {
    const FlowParams p{0.0, 1.0, 256};
    const auto y0 = dirac_coeffs(0.3, EigenBasis(1.0, 20));
    const auto phi = HistoryFunction::zero(y0.basis(), 1.0);
    const auto tr = picard_solve(y0, phi, 2.0, 1, 0.05, p);
    ASSERT_EQ(tr.times.size(), 41u);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const auto exact = semigroup_apply(y0, tr.times[i]);
        for (std::size_t k = 1; k <= 20; ++k) {
            EXPECT_NEAR(tr.fields[i].coeff(k), exact.coeff(k), 1e-13);
        }
    }
}

TEST(Picard, HorizonWithinDelayEqualsForcing) {
    const FlowParams p{1.0, 1.0, 256};
    const EigenBasis basis(1.0, 5);
    const auto y0 = unit_mode(basis, 1);
    const auto phi = HistoryFunction::constant(0.5 * unit_mode(basis, 2), 1.0);
    const auto tr = picard_solve(y0, phi, 1.0, 3, 0.01, p);
    const auto exact = closed_form_trace(y0, phi, tr.times, p);
    EXPECT_LT(max_error(tr, exact), 1e-12);
}

TEST(Picard, IteratesConvergeToClosedForm) {
    const FlowParams p{1.0, 1.0, 256};
    const EigenBasis basis(1.0, 10);
    const auto y0 = project([](double x) { return x * (1.0 - x); }, basis);
    const auto phi = HistoryFunction::zero(basis, 1.0);
    const double dt = 1.0 / 200.0;
    const auto exact = closed_form_trace(y0, phi, picard_solve(y0, phi, 3.0, 1, dt, p).times, p);
    // Iterate n is exact on [0, (n + 1) tau] up to the time-grid error, so on
    // T = 3 tau iterate 2 already sits at the grid error (about 1.4e-6 here).
    const double e1 = max_error(picard_solve(y0, phi, 3.0, 1, dt, p), exact);
    const double e2 = max_error(picard_solve(y0, phi, 3.0, 2, dt, p), exact);
    const double e8 = max_error(picard_solve(y0, phi, 3.0, 8, dt, p), exact);
    EXPECT_GT(e1, 100.0 * e2);
    EXPECT_LT(e2, 1e-5);
    EXPECT_NEAR(e8, e2, 1e-9);
}

TEST(Picard, StiffModesStayAccurate) {
    const FlowParams p{1.0, 1.0, 256};
    const auto y0 = dirac_coeffs(0.3, EigenBasis(1.0, 30));
    const auto phi = HistoryFunction::zero(y0.basis(), 1.0);
    const auto tr = picard_solve(y0, phi, 2.0, 6, 0.01, p);
    const auto exact = closed_form_trace(y0, phi, {tr.times.back()}, p);
    EXPECT_LT(hs_norm(tr.fields.back() - exact.fields.front(), {0.0}), 1e-4);
}

TEST(Picard, RejectsInvalidGrid) {
    const FlowParams p;
    const EigenBasis basis(1.0, 2);
    const auto y0 = unit_mode(basis, 1);
    const auto phi = HistoryFunction::zero(basis, 1.0);
    EXPECT_THROW(picard_solve(y0, phi, 1.0, 0, 0.01, p), InvalidArgument);
    EXPECT_THROW(picard_solve(y0, phi, 0.0, 1, 0.01, p), InvalidArgument);
    EXPECT_THROW(picard_solve(y0, phi, 1.0, 1, 0.3, p), InvalidArgument);
    EXPECT_THROW(picard_solve(y0, phi, 1.0, 1, 0.03, p), InvalidArgument);
    EXPECT_THROW(picard_solve(y0, phi, 1.05, 1, 0.1, p), InvalidArgument);
}

TEST(ClosedFormTrace, RecordsProvenanceAndTimes) {
    const EigenBasis basis(1.0, 3);
    const auto tr = closed_form_trace(unit_mode(basis, 1), HistoryFunction::zero(basis, 1.0), {0.0, 0.5, 1.5}, {});
    EXPECT_EQ(tr.provenance, "closed-form");
    ASSERT_EQ(tr.fields.size(), 3u);
    EXPECT_NEAR(tr.fields[1].coeff(1), std::exp(-0.5 * std::numbers::pi * std::numbers::pi), 1e-15);
}
