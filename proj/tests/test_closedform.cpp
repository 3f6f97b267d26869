#include <gtest/gtest.h>

#include <cmath>

#include "pensionjd/closedform.hpp"
#include "pensionjd/quadrature.hpp"
#include "pensionjd/verify.hpp"
#include "test_support.hpp"

using namespace pensionjd;
using testsupport::baseline;

namespace {

const ValidatedParams& baseline_vp() {
    static const ValidatedParams vp{baseline()};
    return vp;
}

const ClosedForm& baseline_cf() {
    static const ClosedForm cf{baseline_vp()};
    return cf;
}

// brute-force nested quadrature for phi3: composite Simpson over tau, inner
// composite Simpson for the exponent integral of f31. Independent of the
// adaptive machinery in the implementation.
double phi3_brute(const ClosedForm& cf, double t, double v, int n_outer) {
    const ModelParams& p = cf.params();
    const DerivedCoeffs& c = cf.coeffs();
    const auto f31 = [&](double s, double tau) {
        const double g = cf.riccati_phi32(s, tau);
        const double egc = std::exp(g * p.eta_Vc);
        return c.a3 + p.kappa * p.delta * g + p.lambda_V * std::expm1(g * p.eta_VV) +
               p.lambda_c * (egc - 1.0) +
               p.lambda_c * egc * (p.eta_Lc * p.eta_Lc + 2.0 * p.eta_Lc);
    };
    const auto simpson = [](auto&& f, double a, double b, int n) {
        // n even panels
        const double h = (b - a) / n;
        double acc = f(a) + f(b);
        for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
        return acc * h / 3.0;
    };
    const auto integrand = [&](double tau) {
        if (tau <= t) return cf.f3(t);
        const double inner = simpson([&](double s) { return f31(s, tau); }, t, tau, n_outer);
        return std::exp(inner) * cf.f3(tau) * std::exp(cf.riccati_phi32(t, tau) * v);
    };
    return simpson(integrand, t, p.T, n_outer);
}

} // namespace

TEST(PhiScalars, TerminalConditions) {
    const ModelParams p = baseline();
    const PhiScalars ps = baseline_cf().phi_scalars(p.T);
    EXPECT_DOUBLE_EQ(ps.phi1, p.beta1 * p.beta1);
    EXPECT_DOUBLE_EQ(ps.phi2, 2.0 * p.beta1 * (p.alpha1 - p.beta1 * p.X1_star));
    EXPECT_EQ(ps.phi4, 0.0);
    EXPECT_EQ(ps.phi5, 0.0);
    EXPECT_DOUBLE_EQ(ps.phi6,
                     (p.alpha1 - p.beta1 * p.X1_star) * (p.alpha1 - p.beta1 * p.X1_star));
    EXPECT_EQ(baseline_cf().phi3(p.T, 0.04), 0.0);
}

TEST(PhiScalars, Phi1ExponentialWhenLambdaZero) {
    // lambda = 0, a1 = -0.1, beta1 = -1, horizon 1: phi1 = e^{-0.1}
    EXPECT_NEAR(detail::phi1_formula(-0.1, 0.0, -1.0, -1.0, 1.0), 0.90483741803595957,
                1e-15);
}

TEST(PhiScalars, Phi1StrictlyPositiveEverywhere) {
    const ModelParams p = baseline();
    for (int i = 0; i <= 200; ++i) {
        EXPECT_GT(baseline_cf().phi1(p.T * i / 200.0), 0.0);
    }
}

TEST(PhiScalars, FrozenSpotValuesAtTimeZero) {
    // independently computed with a separate quadrature implementation
    const PhiScalars ps = baseline_cf().phi_scalars(0.0);
    EXPECT_NEAR(ps.phi1, 0.09949745049545901, 1e-12);
    EXPECT_NEAR(ps.phi2, -0.39944296163938275, 1e-12);
    EXPECT_NEAR(ps.phi4, -0.2565615801664054, 1e-9);
    EXPECT_NEAR(ps.phi5, 0.12079913043709783, 1e-10);
    EXPECT_NEAR(ps.phi6, 0.5331005208720496, 1e-9);
}

TEST(PhiScalars, MemoGridTracksDirectQuadrature) {
    const ModelParams p = baseline();
    const ClosedForm& cf = baseline_cf();
    for (int i = 0; i <= 37; ++i) {
        const double t = p.T * i / 37.0;
        EXPECT_NEAR(cf.phi5_cached(t), cf.phi5(t), 1e-9);
    }
}

TEST(Phi3, XiZeroKillsPhi3Phi5Phi4) {
    const ValidatedParams vp(testsupport::with_xi_zero());
    const ClosedForm cf(vp);
    EXPECT_EQ(cf.phi5(1.0), 0.0);
    EXPECT_EQ(cf.phi3(0.0, 0.04), 0.0);
    EXPECT_EQ(cf.phi3(2.0, 0.5), 0.0);
    EXPECT_EQ(cf.phi4(0.0), 0.0);
    // the value function no longer depends on salary or variance
    const double v1 = cf.value({1.0, 1.3, 0.3, 0.02});
    const double v2 = cf.value({1.0, 1.3, 1.7, 0.45});
    EXPECT_EQ(v1, v2);
}

TEST(Phi3, TildePhi31AtTauIsSource) {
    const ClosedForm& cf = baseline_cf();
    EXPECT_EQ(cf.tilde_phi31(3.0, 3.0), cf.f3(3.0));
}

TEST(Phi3, TildePhi31AgainstOdeOracle) {
    const ClosedForm& cf = baseline_cf();
    const Verifier vf(baseline_vp(), cf);
    for (const auto& [t, tau] : {std::pair{9.5, 10.0}, {4.0, 4.5}, {0.0, 0.5}, {1.0, 7.0}}) {
        const double impl = cf.tilde_phi31(t, tau);
        const double oracle = vf.tilde31_oracle(t, tau);
        EXPECT_NEAR(impl, oracle, 1e-9 * std::max(1.0, std::abs(oracle)))
            << "t=" << t << " tau=" << tau;
    }
}

TEST(Phi3, RefinementOracle) {
    const ClosedForm& cf = baseline_cf();
    const double impl = cf.phi3(0.0, 0.04);
    const double brute = phi3_brute(cf, 0.0, 0.04, 1024);
    const double brute_half = phi3_brute(cf, 0.0, 0.04, 512);
    EXPECT_NEAR(brute, brute_half, 1e-9); // the oracle itself has converged
    EXPECT_NEAR(impl, brute, 1e-8 * std::abs(impl));
    // frozen spot value from an independent implementation
    EXPECT_NEAR(impl, 0.08310268327043015, 1e-8);
}

TEST(Phi3, HalvingToleranceStaysWithinReportedError) {
    const ClosedForm& cf = baseline_cf();
    const double t = 0.0, v = 0.04;
    const auto integrand = [&](double tau) {
        return cf.tilde_phi31(t, tau) * std::exp(cf.riccati_phi32(t, tau) * v);
    };
    const ModelParams p = baseline();
    const QuadratureResult coarse = adaptive_simpson(integrand, t, p.T, 1e-8);
    const QuadratureResult fine = adaptive_simpson(integrand, t, p.T, 5e-9);
    EXPECT_TRUE(coarse.converged);
    EXPECT_LE(std::abs(coarse.value - fine.value), std::max(coarse.error_estimate, 1e-15));
}

TEST(Value, TerminalAtTargetIsAlphaOneSquared) {
    const ModelParams p = baseline();
    for (double l : {0.0, 0.2, 2.0}) {
        for (double v : {0.01, 0.3}) {
            EXPECT_NEAR(baseline_cf().value({p.T, p.X1_star, l, v}),
                        p.alpha1 * p.alpha1, 1e-13);
        }
    }
}

TEST(Value, TerminalLossShapeForBeta2Zero) {
    ModelParams p = baseline();
    p.beta2 = 0.0; // outside the modeling constraints, fine for the formulas
    const ClosedForm cf{ValidatedParams::unchecked(p)};
    for (double x : {0.5, 1.0, 1.8}) {
        const double expect = (p.alpha1 + p.beta1 * (x - p.X1_star)) *
                              (p.alpha1 + p.beta1 * (x - p.X1_star));
        EXPECT_NEAR(cf.value({p.T, x, 0.7, 0.1}), expect, 1e-13);
    }
}

TEST(Value, FrozenSpotValue) {
    EXPECT_NEAR(baseline_cf().value({0.0, 1.0, 0.2, 0.04}), 0.2093266271130816, 1e-8);
}

TEST(Policy, FrozenAmountAtInitialState) {
    const auto d = baseline_cf().optimal_policy({0.0, 1.0, 0.2, 0.04});
    EXPECT_NEAR(d.amount, 2.2490086021370415, 1e-9);
    EXPECT_FALSE(d.weight_singular);
    EXPECT_NEAR(d.weight, d.amount / 1.0, 1e-12);
}

TEST(Policy, XiZeroWeightForm) {
    const ValidatedParams vp(testsupport::with_xi_zero());
    const ClosedForm cf(vp);
    const DerivedCoeffs& c = cf.coeffs();
    const State s{2.0, 1.4, 0.3, 0.04};
    const double p1 = cf.phi1(s.t), p2 = cf.phi2(s.t);
    const double expect = -((2.0 * p1 * s.x_bar + p2) / (2.0 * p1 * s.x_bar)) *
                              c.varpi1 / c.varpi4 -
                          c.varpi3 / c.varpi4;
    EXPECT_NEAR(cf.optimal_policy(s).weight, expect, 1e-12 * std::abs(expect));
}

TEST(Policy, VanishingFirstTerm) {
    // at 2 phi1 x + phi2 + phi5 l = 0 the weight reduces to the remaining terms
    const ClosedForm& cf = baseline_cf();
    const DerivedCoeffs& c = cf.coeffs();
    const double t = 1.0, l = 0.2;
    const double x = -(cf.phi2(t) + cf.phi5(t) * l) / (2.0 * cf.phi1(t));
    const double expect = -cf.phi5(t) * l * c.varpi2 /
                              (2.0 * cf.phi1(t) * x * c.varpi4) -
                          c.varpi3 / c.varpi4;
    EXPECT_NEAR(cf.optimal_policy({t, x, l, 0.04}).weight, expect,
                1e-10 * std::abs(expect));
}

TEST(Policy, GoldenSectionConfirmsMinimizer) {
    const ClosedForm& cf = baseline_cf();
    const Verifier vf(baseline_vp(), cf);
    const State s{0.0, 1.0, 0.2, 0.04};
    const Verifier::PsiEval pe(vf, s);

    double a = -10.0, b = 10.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    while (b - a > 1e-9) {
        if (pe.psi(c1).value < pe.psi(c2).value) {
            b = c2;
        } else {
            a = c1;
        }
        c1 = b - gr * (b - a);
        c2 = a + gr * (b - a);
    }
    const double argmin = 0.5 * (a + b);
    EXPECT_NEAR(cf.optimal_policy(s).weight, argmin, 1e-6);
}

TEST(Policy, AmountSmoothThroughZeroWealth) {
    const ClosedForm& cf = baseline_cf();
    const double t = 3.0, l = 0.4, v = 0.05;
    const double a_minus = cf.optimal_policy({t, -1e-9, l, v}).amount;
    const double a_zero = cf.optimal_policy({t, 0.0, l, v}).amount;
    const double a_plus = cf.optimal_policy({t, 1e-9, l, v}).amount;
    EXPECT_NEAR(a_minus, a_plus, 1e-7 * std::abs(a_zero));
    EXPECT_NEAR(a_zero, 0.5 * (a_minus + a_plus), 1e-7 * std::abs(a_zero));
    EXPECT_TRUE(cf.optimal_policy({t, 0.0, l, v}).weight_singular);
    EXPECT_TRUE(std::isnan(cf.optimal_policy({t, 1e-13, l, v}).weight));
}

TEST(Policy, WeightTimesWealthEqualsAmount) {
    const ClosedForm& cf = baseline_cf();
    for (double x : {1e-12, 1e-6, 0.3, 1.0, -2.0}) {
        const auto d = cf.optimal_policy({1.5, x, 0.25, 0.06});
        ASSERT_FALSE(d.weight_singular);
        EXPECT_NEAR(d.weight * x, d.amount, 1e-12 * std::abs(d.amount));
    }
}
