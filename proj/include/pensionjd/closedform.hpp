#pragma once

// Closed-form value function and optimal policy.
//
// The value function decomposes as
//   phi(t, X, L, V) = phi1(t) X^2 + phi2(t) X + phi3(t,V) L^2
//                     + phi4(t) L + phi5(t) X L + phi6(t),
// with scalar coefficients solving linear backward ODEs and phi3 built by a
// Duhamel integral of exponential-affine solutions
//   phi3(t, V) = int_t^T tilde_phi31(t; tau) exp(tilde_phi32(t; tau) V) dtau,
// where tilde_phi32 solves a Riccati equation (riccati.hpp) and
//   tilde_phi31(t; tau) = exp(int_t^tau f31(s; tau) ds) f3(tau).
//
// The optimal stock weight is
//   pi* = -[(2 phi1 X + phi2 + phi5 L)/(2 phi1 X)] varpi1/varpi4
//         - [phi5 L/(2 phi1 X)] varpi2/varpi4 - varpi3/varpi4,
// and the amount form A* = pi* X is smooth through X = 0; the simulator
// consumes the amount form.

#include <cmath>
#include <limits>
#include <vector>

#include "pensionjd/model.hpp"
#include "pensionjd/quadrature.hpp"
#include "pensionjd/riccati.hpp"

namespace pensionjd {

struct PhiScalars {
    double phi1 = 0.0, phi2 = 0.0, phi4 = 0.0, phi5 = 0.0, phi6 = 0.0;
};

namespace detail {

// phi1(t) = lambda beta2^2 E1(a1, T-t) + beta1^2 e^{a1 (T-t)}
inline double phi1_formula(double a1, double lambda, double beta1, double beta2, double h) {
    return lambda * beta2 * beta2 * growth_integral(a1, h) +
           beta1 * beta1 * std::exp(a1 * h);
}

// phi2(t) = 2 lambda (alpha2 beta2 - beta2^2 X2*) E1(a2, T-t)
//           + 2 beta1 (alpha1 - beta1 X1*) e^{a2 (T-t)}
inline double phi2_formula(double a2, double lambda, double alpha1, double beta1, double X1s,
                           double alpha2, double beta2, double X2s, double h) {
    return 2.0 * lambda * (alpha2 * beta2 - beta2 * beta2 * X2s) * growth_integral(a2, h) +
           2.0 * beta1 * (alpha1 - beta1 * X1s) * std::exp(a2 * h);
}

} // namespace detail

class ClosedForm {
public:
    explicit ClosedForm(const ValidatedParams& vp)
        : p_(vp.get()), c_(derive_coeffs(vp)), ric_(RiccatiSolution::make(p_)) {
        build_phi5_grid();
    }

    const ModelParams& params() const { return p_; }
    const DerivedCoeffs& coeffs() const { return c_; }
    const RiccatiSolution& riccati() const { return ric_; }

    double phi1(double t) const {
        return detail::phi1_formula(c_.a1, p_.lambda_mort, p_.beta1, p_.beta2, p_.T - t);
    }

    double phi2(double t) const {
        return detail::phi2_formula(c_.a2, p_.lambda_mort, p_.alpha1, p_.beta1, p_.X1_star,
                                    p_.alpha2, p_.beta2, p_.X2_star, p_.T - t);
    }

    // phi5(t) = 2 xi int_t^T e^{(a5 + lambda_c eta_Lc)(s-t)} phi1(s) ds
    double phi5(double t) const {
        if (p_.xi == 0.0) return 0.0;
        const double k = c_.a5 + p_.lambda_c * p_.eta_Lc;
        const double v = integrate([&](double s) { return std::exp(k * (s - t)) * phi1(s); },
                                   t, p_.T, quad_tol_, quad_depth_, "phi5 quadrature");
        return 2.0 * p_.xi * v;
    }

    // phi4(t) = int_t^T e^{(a4 + lambda_c eta_Lc)(s-t)}
    //             [xi phi2 - phi2 phi5/(2 phi1) varpi1(varpi1+varpi2)/varpi4] ds
    double phi4(double t) const {
        const double k = c_.a4 + p_.lambda_c * p_.eta_Lc;
        const double fac = c_.varpi1 * (c_.varpi1 + c_.varpi2) / c_.varpi4;
        return integrate(
            [&](double s) {
                const double p2 = phi2(s);
                return std::exp(k * (s - t)) *
                       (p_.xi * p2 - p2 * phi5_cached(s) / (2.0 * phi1(s)) * fac);
            },
            t, p_.T, quad_tol_, quad_depth_, "phi4 quadrature");
    }

    // phi6(t) = int_t^T e^{-lambda (s-t)}
    //             [lambda (alpha2 - beta2 X2*)^2 - phi2^2/(4 phi1) varpi1^2/varpi4] ds
    //           + (alpha1 - beta1 X1*)^2 e^{-lambda (T-t)}
    // The e^{-lambda(s-t)} weight is the one consistent with the phi6 ODE.
    double phi6(double t) const {
        const double lam = p_.lambda_mort;
        const double fac = c_.varpi1 * c_.varpi1 / c_.varpi4;
        const double death = lam * (p_.alpha2 - p_.beta2 * p_.X2_star) *
                             (p_.alpha2 - p_.beta2 * p_.X2_star);
        const double v = integrate(
            [&](double s) {
                const double p2 = phi2(s);
                return std::exp(-lam * (s - t)) * (death - p2 * p2 / (4.0 * phi1(s)) * fac);
            },
            t, p_.T, quad_tol_, quad_depth_, "phi6 quadrature");
        const double b1x = p_.alpha1 - p_.beta1 * p_.X1_star;
        return v + b1x * b1x * std::exp(-lam * (p_.T - t));
    }

    PhiScalars phi_scalars(double t) const {
        return {phi1(t), phi2(t), phi4(t), phi5(t), phi6(t)};
    }

    double riccati_phi32(double t, double tau) const { return ric_(t, tau); }

    // f3(tau) = -phi5^2/(4 phi1) (varpi1+varpi2)^2/varpi4 + xi phi5
    double f3(double tau) const {
        const double p5 = phi5_cached(tau);
        const double s = c_.varpi1 + c_.varpi2;
        return -p5 * p5 / (4.0 * phi1(tau)) * s * s / c_.varpi4 + p_.xi * p5;
    }

    // tilde_phi31(t; tau) = exp(int_t^tau f31(s; tau) ds) f3(tau),
    // inner integral by 64-point Gauss-Legendre
    double tilde_phi31(double t, double tau) const {
        if (t > tau) throw std::domain_error("tilde_phi31: t > tau");
        const double src = f3(tau);
        if (t == tau) return src;
        const double I = gauss_legendre64([&](double s) { return f31(s, tau); }, t, tau);
        return std::exp(I) * src;
    }

    // phi3(t, V) and its V-derivatives, by differentiating under the integral
    double phi3(double t, double v) const { return phi3_weighted(t, v, 0); }
    double phi3_dv(double t, double v) const { return phi3_weighted(t, v, 1); }
    double phi3_dvv(double t, double v) const { return phi3_weighted(t, v, 2); }

    double value(const State& s) const {
        const PhiScalars ps = phi_scalars(s.t);
        return ps.phi1 * s.x_bar * s.x_bar + ps.phi2 * s.x_bar +
               phi3(s.t, s.v) * s.l_bar * s.l_bar + ps.phi4 * s.l_bar +
               ps.phi5 * s.x_bar * s.l_bar + ps.phi6;
    }

    struct PolicyDecision {
        double amount = 0.0;          // A* = pi* X, smooth through X = 0
        double weight = 0.0;          // pi*, NaN when weight_singular
        bool weight_singular = false; // |X| < 1e-12
    };

    static double amount_from(double p1, double p2, double p5, const DerivedCoeffs& c,
                              double x, double l) {
        return -((2.0 * p1 * x + p2 + p5 * l) * c.varpi1 + p5 * l * c.varpi2 +
                 2.0 * p1 * x * c.varpi3) /
               (2.0 * p1 * c.varpi4);
    }

    PolicyDecision optimal_policy(const State& s) const {
        const double p1 = phi1(s.t), p2 = phi2(s.t), p5 = phi5(s.t);
        PolicyDecision d;
        d.amount = amount_from(p1, p2, p5, c_, s.x_bar, s.l_bar);
        if (std::abs(s.x_bar) < 1e-12) {
            d.weight_singular = true;
            d.weight = std::numeric_limits<double>::quiet_NaN();
        } else {
            d.weight = -((2.0 * p1 * s.x_bar + p2 + p5 * s.l_bar) / (2.0 * p1 * s.x_bar)) *
                           c_.varpi1 / c_.varpi4 -
                       (p5 * s.l_bar / (2.0 * p1 * s.x_bar)) * c_.varpi2 / c_.varpi4 -
                       c_.varpi3 / c_.varpi4;
        }
        return d;
    }

    // phi5 from the memoized grid (exact zero when xi = 0)
    double phi5_cached(double t) const {
        if (p_.xi == 0.0) return 0.0;
        return interp_cubic(phi5_grid_, t);
    }

private:
    // f31(s; tau) = a3 + kappa delta g + lambda_V(e^{g eta_VV}-1)
    //               + lambda_c(e^{g eta_Vc}-1) + lambda_c e^{g eta_Vc}(eta_Lc^2 + 2 eta_Lc)
    // with g = tilde_phi32(s; tau)
    double f31(double s, double tau) const {
        const double g = ric_(s, tau);
        const double egc = std::exp(g * p_.eta_Vc);
        return c_.a3 + p_.kappa * p_.delta * g + p_.lambda_V * std::expm1(g * p_.eta_VV) +
               p_.lambda_c * (egc - 1.0) +
               p_.lambda_c * egc * (p_.eta_Lc * p_.eta_Lc + 2.0 * p_.eta_Lc);
    }

    double phi3_weighted(double t, double v, int power) const {
        if (p_.xi == 0.0) return 0.0; // f3 vanishes identically
        return integrate(
            [&](double tau) {
                const double g = ric_(t, tau);
                double w = std::exp(g * v);
                for (int k = 0; k < power; ++k) w *= g;
                return tilde_phi31(t, tau) * w;
            },
            t, p_.T, quad_tol_, quad_depth_, "phi3 quadrature");
    }

    void build_phi5_grid() {
        phi5_grid_.resize(grid_n_);
        if (p_.xi == 0.0) return;
        for (int i = 0; i < grid_n_; ++i) {
            const double t = p_.T * i / (grid_n_ - 1);
            phi5_grid_[i] = phi5(t);
        }
    }

    // local 4-point Lagrange cubic on the uniform grid over [0, T]
    double interp_cubic(const std::vector<double>& g, double t) const {
        const double h = p_.T / (grid_n_ - 1);
        double u = t / h;
        int i0 = static_cast<int>(std::floor(u)) - 1;
        if (i0 < 0) i0 = 0;
        if (i0 > grid_n_ - 4) i0 = grid_n_ - 4;
        const double x = u - i0;
        const double w0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
        const double w1 = x * (x - 2.0) * (x - 3.0) / 2.0;
        const double w2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
        const double w3 = x * (x - 1.0) * (x - 2.0) / 6.0;
        return w0 * g[i0] + w1 * g[i0 + 1] + w2 * g[i0 + 2] + w3 * g[i0 + 3];
    }

    static constexpr int grid_n_ = 512;
    static constexpr double quad_tol_ = 1e-10;
    static constexpr int quad_depth_ = 40;

    ModelParams p_;
    DerivedCoeffs c_;
    RiccatiSolution ric_;
    std::vector<double> phi5_grid_;
};

} // namespace pensionjd
