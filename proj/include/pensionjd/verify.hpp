#pragma once

// Independent numerical verification of the closed forms:
//   - backward Runge-Kutta integration of the six coefficient ODE systems
//     (the ground truth the closed forms are checked against),
//   - the full HJB residual Psi(pi*) assembled term by term,
//   - the first-order condition dPsi/dpi(pi*),
//   - the six monomial-bracket residuals of the pi-reduced equation,
//   - Monte Carlo consistency of the analytic value, with a convexity probe.
//
// Relative residuals are normalized by the largest additive term of the
// expression, so they stay meaningful when every term is small.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "pensionjd/closedform.hpp"
#include "pensionjd/model.hpp"
#include "pensionjd/montecarlo.hpp"

namespace pensionjd {

struct ResidualReport {
    std::string name;
    std::size_t grid_size = 0;
    double max_abs = 0.0;
    double max_rel = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

inline nlohmann::json to_json(const ResidualReport& r) {
    return {{"check", r.name},         {"grid_size", r.grid_size},
            {"max_abs_residual", r.max_abs}, {"max_rel_residual", r.max_rel},
            {"tolerance", r.tolerance},      {"pass", r.pass},
            {"detail", r.detail}};
}

inline nlohmann::json to_json(const std::vector<ResidualReport>& rs) {
    nlohmann::json arr = nlohmann::json::array();
    bool all = true;
    for (const auto& r : rs) {
        arr.push_back(to_json(r));
        all = all && r.pass;
    }
    return {{"checks", arr}, {"all_pass", all}};
}

// Halton low-discrepancy sequence, for quasi-random state grids.
inline double halton(std::uint64_t index, std::uint64_t base) {
    double f = 1.0, r = 0.0;
    for (std::uint64_t i = index + 1; i > 0; i /= base) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
    }
    return r;
}

class Verifier {
public:
    Verifier(const ValidatedParams& vp, const ClosedForm& cf)
        : p_(vp.get()), cf_(cf), c_(cf.coeffs()) {}

    // ---- ODE oracle -----------------------------------------------------
    //
    // Backward integration of the reduced scalar systems
    //   phi1' + a1 phi1 + lambda beta2^2 = 0
    //   phi2' + a2 phi2 + 2 lambda (alpha2 beta2 - beta2^2 X2*) = 0
    //   phi5' + (a5 + lambda_c eta_Lc) phi5 + 2 xi phi1 = 0
    //   phi4' + (a4 + lambda_c eta_Lc) phi4 + xi phi2
    //          - phi2 phi5/(2 phi1) varpi1(varpi1+varpi2)/varpi4 = 0
    //   phi6' - lambda phi6 + lambda (alpha2 - beta2 X2*)^2
    //          - phi2^2/(4 phi1) varpi1^2/varpi4 = 0
    // from the terminal conditions, written forward in s = T - t.

    struct OracleValues {
        std::vector<double> t, phi1, phi2, phi4, phi5, phi6;
    };

    OracleValues ode_oracle(const std::vector<double>& tgrid, double tol = 1e-10) const {
        namespace ode = boost::numeric::odeint;
        using Y = std::array<double, 5>;
        const double lam = p_.lambda_mort;
        const double f45 = c_.varpi1 * (c_.varpi1 + c_.varpi2) / c_.varpi4;
        const double f6 = c_.varpi1 * c_.varpi1 / c_.varpi4;
        const double k5 = c_.a5 + p_.lambda_c * p_.eta_Lc;
        const double k4 = c_.a4 + p_.lambda_c * p_.eta_Lc;
        const double death = lam * (p_.alpha2 - p_.beta2 * p_.X2_star) *
                             (p_.alpha2 - p_.beta2 * p_.X2_star);
        const auto rhs = [&](const Y& y, Y& dyds, double) {
            dyds[0] = c_.a1 * y[0] + lam * p_.beta2 * p_.beta2;
            dyds[1] = c_.a2 * y[1] +
                      2.0 * lam * (p_.alpha2 * p_.beta2 - p_.beta2 * p_.beta2 * p_.X2_star);
            dyds[2] = k5 * y[2] + 2.0 * p_.xi * y[0];
            dyds[3] = k4 * y[3] - y[1] * y[2] / (2.0 * y[0]) * f45 + p_.xi * y[1];
            dyds[4] = -lam * y[4] + death - y[1] * y[1] / (4.0 * y[0]) * f6;
        };
        Y y{p_.beta1 * p_.beta1,
            2.0 * p_.beta1 * (p_.alpha1 - p_.beta1 * p_.X1_star),
            0.0, 0.0,
            (p_.alpha1 - p_.beta1 * p_.X1_star) * (p_.alpha1 - p_.beta1 * p_.X1_star)};

        // requested t values, integrated in ascending s = T - t
        std::vector<std::size_t> order(tgrid.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return tgrid[a] > tgrid[b]; });

        OracleValues out;
        out.t = tgrid;
        out.phi1.resize(tgrid.size());
        out.phi2.resize(tgrid.size());
        out.phi4.resize(tgrid.size());
        out.phi5.resize(tgrid.size());
        out.phi6.resize(tgrid.size());

        auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<Y>());
        double s_cur = 0.0;
        for (std::size_t idx : order) {
            const double s_next = p_.T - tgrid[idx];
            if (s_next > s_cur) {
                ode::integrate_adaptive(stepper, rhs, y, s_cur, s_next,
                                        std::max(1e-8, (s_next - s_cur) / 64.0));
                s_cur = s_next;
            }
            out.phi1[idx] = y[0];
            out.phi2[idx] = y[1];
            out.phi5[idx] = y[2];
            out.phi4[idx] = y[3];
            out.phi6[idx] = y[4];
        }
        return out;
    }

    // phi32(t; tau) by integrating g'(u) = 1 + b g + sigma_V^2/2 g^2 forward
    // in u = tau - t from g(0) = 0
    double riccati_oracle(double t, double tau, double tol = 1e-10) const {
        std::vector<double> v = riccati_oracle_grid(tau, {t}, tol);
        return v[0];
    }

    std::vector<double> riccati_oracle_grid(double tau, const std::vector<double>& ts,
                                            double tol = 1e-10) const {
        namespace ode = boost::numeric::odeint;
        using Y = std::array<double, 1>;
        const double b = 2.0 * p_.sigma_V * p_.rho_LV - p_.kappa;
        const double s2 = p_.sigma_V * p_.sigma_V;
        const auto rhs = [&](const Y& g, Y& dg, double) {
            dg[0] = 1.0 + b * g[0] + 0.5 * s2 * g[0] * g[0];
        };
        std::vector<std::size_t> order(ts.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b2) { return ts[a] > ts[b2]; });
        std::vector<double> out(ts.size());
        Y g{0.0};
        auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<Y>());
        double u_cur = 0.0;
        for (std::size_t idx : order) {
            const double u_next = tau - ts[idx];
            if (u_next < 0.0) throw std::domain_error("riccati_oracle: t > tau");
            if (u_next > u_cur) {
                ode::integrate_adaptive(stepper, rhs, g, u_cur, u_next,
                                        std::max(1e-10, (u_next - u_cur) / 64.0));
                u_cur = u_next;
            }
            out[idx] = g[0];
        }
        return out;
    }

    // tilde_phi31(t; tau) by joint integration of (phi32, phi31) backward
    double tilde31_oracle(double t, double tau, double tol = 1e-12) const {
        namespace ode = boost::numeric::odeint;
        using Y = std::array<double, 2>;
        const double b = 2.0 * p_.sigma_V * p_.rho_LV - p_.kappa;
        const double s2 = p_.sigma_V * p_.sigma_V;
        const auto rhs = [&](const Y& y, Y& dy, double) {
            const double g = y[0];
            const double egc = std::exp(g * p_.eta_Vc);
            const double f31 = c_.a3 + p_.kappa * p_.delta * g +
                               p_.lambda_V * std::expm1(g * p_.eta_VV) +
                               p_.lambda_c * (egc - 1.0) +
                               p_.lambda_c * egc * (p_.eta_Lc * p_.eta_Lc + 2.0 * p_.eta_Lc);
            dy[0] = 1.0 + b * g + 0.5 * s2 * g * g;
            dy[1] = f31 * y[1];
        };
        Y y{0.0, cf_.f3(tau)};
        if (tau > t) {
            auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<Y>());
            ode::integrate_adaptive(stepper, rhs, y, 0.0, tau - t, (tau - t) / 64.0);
        }
        return y[1];
    }

    // ---- HJB residual ---------------------------------------------------
    //
    // Precomputes the state-dependent pieces once, then assembles Psi(pi)
    // term by term following the HJB generator, including the five nonlocal
    // jump terms. scale is the largest additive term magnitude.

    struct PsiValue {
        double value = 0.0;
        double scale = 0.0;
        double rel() const { return scale > 0.0 ? std::abs(value) / scale : std::abs(value); }
    };

    class PsiEval {
    public:
        PsiEval(const Verifier& vf, const State& s) : vf_(vf), s_(s) {
            const ModelParams& p = vf.p_;
            const ClosedForm& cf = vf.cf_;
            p1_ = cf.phi1(s.t);
            p2_ = cf.phi2(s.t);
            p4_ = cf.phi4(s.t);
            p5_ = cf.phi5(s.t);
            p6_ = cf.phi6(s.t);
            p3_ = cf.phi3(s.t, s.v);
            p3_shift_vv_ = cf.phi3(s.t, s.v + p.eta_VV);
            p3_shift_vc_ = cf.phi3(s.t, s.v + p.eta_Vc);
            p3_dv_ = cf.phi3_dv(s.t, s.v);
            p3_dvv_ = cf.phi3_dvv(s.t, s.v);
            phi_t_ = vf.time_derivative(
                [&](double t) { return cf.value({t, s.x_bar, s.l_bar, s.v}); }, s.t);
            phi0_ = phival(s.x_bar, s.l_bar, p3_);
        }

        // value of the ansatz at (x, l) with phi3 already evaluated at the
        // wanted variance argument
        double phival(double x, double l, double p3v) const {
            return p1_ * x * x + p2_ * x + p3v * l * l + p4_ * l + p5_ * x * l + p6_;
        }

        PsiValue psi(double pi) const {
            const ModelParams& p = vf_.p_;
            const double x = s_.x_bar, l = s_.l_bar, v = s_.v;
            const double mz = p.m + 0.5 * p.zeta * p.zeta;
            const double zr = p.zeta * p.sigma_Pi * p.rho_Pir;
            const double sPi2 = p.sigma_Pi * p.sigma_Pi;
            const double j = p.eta_Pi * p.eta_Pi - p.eta_Pi;
            const double lam = p.lambda_mort;

            const double phiX = 2.0 * p1_ * x + p2_ + p5_ * l;
            const double phiXX = 2.0 * p1_;
            const double phiL = 2.0 * p3_ * l + p4_ + p5_ * x;
            const double phiLL = 2.0 * p3_;
            const double phiXL = p5_;
            const double phiV = p3_dv_ * l * l;
            const double phiVV = p3_dvv_ * l * l;
            const double phiLV = 2.0 * p3_dv_ * l;

            const double d2 = p.alpha2 + p.beta2 * (x - p.X2_star);
            const double terms[] = {
                phi_t_,
                lam * d2 * d2,
                -lam * phi0_,
                phiX * x * (mz + pi * (p.mu_S - mz + zr) - p.mu_Pi + sPi2 - zr),
                phiX * p.xi * l,
                0.5 * phiXX * x * x *
                    ((1.0 - pi) * (1.0 - pi) * p.zeta * p.zeta +
                     pi * pi * p.sigma_SS * p.sigma_SS + sPi2 - 2.0 * (1.0 - pi) * zr),
                phiL * l * (p.mu_L - p.mu_Pi + sPi2),
                0.5 * phiLL * l * l * (p.sigma_LS * p.sigma_LS + v + sPi2),
                phiV * p.kappa * (p.delta - v),
                0.5 * phiVV * p.sigma_V * p.sigma_V * v,
                phiXL * x * l * (pi * p.sigma_SS * p.sigma_LS + sPi2 - (1.0 - pi) * zr),
                phiLV * l * v * p.sigma_V * p.rho_LV,
                p.lambda_S * (phival(x * (1.0 + pi * p.eta_S), l, p3_) - phi0_),
                p.lambda_L * (phival(x, l * (1.0 + p.eta_LL), p3_) - phi0_),
                p.lambda_V * (phival(x, l, p3_shift_vv_) - phi0_),
                p.lambda_c * (phival(x, l * (1.0 + p.eta_Lc), p3_shift_vc_) - phi0_),
                p.lambda_Pi * (phival(x * (1.0 + j), l * (1.0 + j), p3_) - phi0_),
            };
            PsiValue out;
            for (double t : terms) {
                out.value += t;
                out.scale = std::max(out.scale, std::abs(t));
            }
            return out;
        }

        // analytic dPsi/dpi: the pi-polynomial is exactly quadratic
        PsiValue dpsi_dpi(double pi) const {
            const double x = s_.x_bar, l = s_.l_bar;
            const DerivedCoeffs& c = vf_.c_;
            const double terms[] = {
                2.0 * p1_ * x * x * c.varpi4 * pi,
                (2.0 * p1_ * x + p2_ + p5_ * l) * x * c.varpi1,
                p5_ * x * l * c.varpi2,
                2.0 * p1_ * x * x * c.varpi3,
            };
            PsiValue out;
            for (double t : terms) {
                out.value += t;
                out.scale = std::max(out.scale, std::abs(t));
            }
            return out;
        }

        double d2psi_dpi2() const { return 2.0 * p1_ * s_.x_bar * s_.x_bar * vf_.c_.varpi4; }
        double phi1_at_t() const { return p1_; }

    private:
        const Verifier& vf_;
        State s_;
        double p1_ = 0, p2_ = 0, p3_ = 0, p4_ = 0, p5_ = 0, p6_ = 0;
        double p3_shift_vv_ = 0, p3_shift_vc_ = 0, p3_dv_ = 0, p3_dvv_ = 0;
        double phi_t_ = 0, phi0_ = 0;
    };

    PsiValue hjb_residual(const State& s) const {
        PsiEval pe(*this, s);
        return pe.psi(cf_.optimal_policy(s).amount / nonzero_x(s.x_bar));
    }

    PsiValue foc_residual(const State& s) const {
        PsiEval pe(*this, s);
        return pe.dpsi_dpi(cf_.optimal_policy(s).amount / nonzero_x(s.x_bar));
    }

    // ---- monomial-bracket residuals --------------------------------------
    //
    // The six bracketed coefficient expressions of the pi-reduced equation,
    // each of which must vanish identically. Time derivatives by central
    // difference, variance derivatives of phi3 analytic, V-shift terms
    // through the evaluators (the scalar coefficients are V-independent, so
    // their shift differences vanish exactly).

    std::array<PsiValue, 6> ansatz_residuals(double t, double v) const {
        const ModelParams& p = p_;
        const double lam = p.lambda_mort;
        const double jc = p.eta_Lc * p.eta_Lc + 2.0 * p.eta_Lc;

        const double p1 = cf_.phi1(t), p2 = cf_.phi2(t), p4 = cf_.phi4(t), p5 = cf_.phi5(t);
        const double p3 = cf_.phi3(t, v);
        const double p3_vv = cf_.phi3(t, v + p.eta_VV);
        const double p3_vc = cf_.phi3(t, v + p.eta_Vc);
        const double p3_dv = cf_.phi3_dv(t, v);
        const double p3_dvv = cf_.phi3_dvv(t, v);

        const double d1t = time_derivative([&](double u) { return cf_.phi1(u); }, t);
        const double d2t = time_derivative([&](double u) { return cf_.phi2(u); }, t);
        const double d3t = time_derivative([&](double u) { return cf_.phi3(u, v); }, t);
        const double d4t = time_derivative([&](double u) { return cf_.phi4(u); }, t);
        const double d5t = time_derivative([&](double u) { return cf_.phi5(u); }, t);
        const double d6t = time_derivative([&](double u) { return cf_.phi6(u); }, t);

        std::array<PsiValue, 6> out;
        const auto collect = [](std::initializer_list<double> terms) {
            PsiValue r;
            for (double x : terms) {
                r.value += x;
                r.scale = std::max(r.scale, std::abs(x));
            }
            return r;
        };

        // X^2:  phi1_t + a1 phi1 + lambda beta2^2
        out[0] = collect({d1t, c_.a1 * p1, lam * p.beta2 * p.beta2});
        // X:    phi2_t + a2 phi2 + 2 lambda (alpha2 beta2 - beta2^2 X2*)
        out[1] = collect({d2t, c_.a2 * p2,
                          2.0 * lam * (p.alpha2 * p.beta2 - p.beta2 * p.beta2 * p.X2_star)});
        // L^2:  the full phi3 equation
        out[2] = collect({d3t, (c_.a3 + v) * p3,
                          (p.kappa * (p.delta - v) + 2.0 * p.sigma_V * p.rho_LV * v) * p3_dv,
                          0.5 * p.sigma_V * p.sigma_V * v * p3_dvv,
                          p.lambda_V * (p3_vv - p3), p.lambda_c * (p3_vc - p3),
                          p.lambda_c * p3_vc * jc,
                          -p5 * p5 / (4.0 * p1) * (c_.varpi1 + c_.varpi2) *
                              (c_.varpi1 + c_.varpi2) / c_.varpi4,
                          p.xi * p5});
        // L:    phi4_t + a4 phi4 + lambda_c eta_Lc phi4 + xi phi2 - coupling
        out[3] = collect({d4t, c_.a4 * p4, p.lambda_c * p.eta_Lc * p4,
                          -p2 * p5 / (2.0 * p1) * c_.varpi1 * (c_.varpi1 + c_.varpi2) / c_.varpi4,
                          p.xi * p2});
        // X L:  phi5_t + a5 phi5 + lambda_c eta_Lc phi5 + 2 xi phi1
        out[4] = collect({d5t, c_.a5 * p5, p.lambda_c * p.eta_Lc * p5, 2.0 * p.xi * p1});
        // 1:    phi6_t - lambda phi6 - phi2^2/(4 phi1) varpi1^2/varpi4 + death term
        out[5] = collect({d6t, -lam * cf_.phi6(t),
                          -p2 * p2 / (4.0 * p1) * c_.varpi1 * c_.varpi1 / c_.varpi4,
                          lam * (p.alpha2 - p.beta2 * p.X2_star) *
                              (p.alpha2 - p.beta2 * p.X2_star)});
        return out;
    }

    // ---- report-producing checks -----------------------------------------

    ResidualReport check_ode(std::size_t grid_n = 101, double tol = 1e-6) const {
        std::vector<double> tg(grid_n);
        for (std::size_t i = 0; i < grid_n; ++i)
            tg[i] = p_.T * static_cast<double>(i) / static_cast<double>(grid_n - 1);
        const OracleValues ov = ode_oracle(tg);
        double max_abs = 0.0, max_mag = 0.0;
        for (std::size_t i = 0; i < grid_n; ++i) {
            const PhiScalars ps = cf_.phi_scalars(tg[i]);
            const double diffs[] = {ps.phi1 - ov.phi1[i], ps.phi2 - ov.phi2[i],
                                    ps.phi4 - ov.phi4[i], ps.phi5 - ov.phi5[i],
                                    ps.phi6 - ov.phi6[i]};
            const double mags[] = {ov.phi1[i], ov.phi2[i], ov.phi4[i], ov.phi5[i], ov.phi6[i]};
            for (double d : diffs) max_abs = std::max(max_abs, std::abs(d));
            for (double m : mags) max_mag = std::max(max_mag, std::abs(m));
        }
        // phi32 against its oracle for a few outer times
        double ric_abs = 0.0;
        for (double frac : {1.0, 0.75, 0.5, 0.25}) {
            const double tau = p_.T * frac;
            std::vector<double> ts;
            for (int i = 0; i <= 20; ++i) ts.push_back(tau * i / 20.0);
            const std::vector<double> org = riccati_oracle_grid(tau, ts);
            for (std::size_t i = 0; i < ts.size(); ++i)
                ric_abs = std::max(ric_abs,
                                   std::abs(cf_.riccati_phi32(ts[i], tau) - org[i]));
        }
        ResidualReport r;
        r.name = "ode";
        r.grid_size = grid_n;
        r.max_abs = std::max(max_abs, ric_abs);
        r.max_rel = max_mag > 0.0 ? r.max_abs / max_mag : r.max_abs;
        r.tolerance = tol;
        r.pass = r.max_abs < tol;
        r.detail = "closed-form phi1,phi2,phi4,phi5,phi6 and phi32 vs backward RK(5,4)";
        return r;
    }

    // quasi-random states in [0,T] x [0.1,5] x [0.05,2] x [0.005,0.5]
    State halton_state(std::uint64_t i) const {
        return {halton(i, 2) * p_.T, 0.1 + halton(i, 3) * 4.9, 0.05 + halton(i, 5) * 1.95,
                0.005 + halton(i, 7) * 0.495};
    }

    ResidualReport check_hjb(std::size_t n_states = 100, double tol = 1e-6) const {
        ResidualReport r;
        r.name = "hjb";
        r.grid_size = n_states;
        r.tolerance = tol;
        for (std::size_t i = 0; i < n_states; ++i) {
            const PsiValue pv = hjb_residual(halton_state(i));
            r.max_abs = std::max(r.max_abs, std::abs(pv.value));
            r.max_rel = std::max(r.max_rel, pv.rel());
        }
        r.pass = r.max_rel < tol;
        r.detail = "Psi(pi*) over quasi-random states, relative to largest term";
        return r;
    }

    // Psi(pi* + d) - Psi(pi*) must equal phi1 X^2 varpi4 d^2 exactly
    ResidualReport check_hjb_quadratic(std::size_t n_states = 20, double tol = 1e-10) const {
        ResidualReport r;
        r.name = "hjb-quadratic";
        r.grid_size = n_states;
        r.tolerance = tol;
        for (std::size_t i = 0; i < n_states; ++i) {
            const State s = halton_state(i);
            PsiEval pe(*this, s);
            const double pi_star = cf_.optimal_policy(s).amount / nonzero_x(s.x_bar);
            const double base = pe.psi(pi_star).value;
            for (double d : {0.1, 1.0}) {
                const double expect = pe.phi1_at_t() * s.x_bar * s.x_bar * c_.varpi4 * d * d;
                const double got = pe.psi(pi_star + d).value - base;
                const double rel = std::abs(got - expect) / std::abs(expect);
                r.max_abs = std::max(r.max_abs, std::abs(got - expect));
                r.max_rel = std::max(r.max_rel, rel);
            }
        }
        r.pass = r.max_rel < tol;
        r.detail = "quadratic offset identity for d in {0.1, 1}";
        return r;
    }

    ResidualReport check_foc(std::size_t n_states = 100, double tol = 1e-12,
                             std::size_t n_fd = 20, double fd_tol = 1e-6) const {
        ResidualReport r;
        r.name = "foc";
        r.grid_size = n_states;
        r.tolerance = tol;
        double fd_worst = 0.0;
        for (std::size_t i = 0; i < n_states; ++i) {
            const State s = halton_state(i);
            PsiEval pe(*this, s);
            const double pi_star = cf_.optimal_policy(s).amount / nonzero_x(s.x_bar);
            const PsiValue an = pe.dpsi_dpi(pi_star);
            r.max_abs = std::max(r.max_abs, std::abs(an.value));
            r.max_rel = std::max(r.max_rel, an.rel());
            if (i < n_fd) {
                // Psi is an exact quadratic, so the central difference is
                // exact up to roundoff
                const double h = 1e-6;
                const double fd = (pe.psi(pi_star + h).value - pe.psi(pi_star - h).value) /
                                  (2.0 * h);
                const double sc = std::max(an.scale, std::abs(pe.d2psi_dpi2()));
                fd_worst = std::max(fd_worst, std::abs(fd - an.value) / sc);
            }
        }
        r.pass = r.max_rel < tol && fd_worst < fd_tol;
        r.detail = "analytic dPsi/dpi at pi*; finite-difference agreement " +
                   std::to_string(fd_worst);
        return r;
    }

    ResidualReport check_ansatz(std::size_t nt = 10, std::size_t nv = 10,
                                double tol = 1e-6) const {
        ResidualReport r;
        r.name = "ansatz";
        r.grid_size = nt * nv;
        r.tolerance = tol;
        for (std::size_t i = 0; i < nt; ++i) {
            const double t = (p_.T - 1e-3) * static_cast<double>(i) /
                             static_cast<double>(nt - 1);
            for (std::size_t k = 0; k < nv; ++k) {
                const double v = 0.005 + (0.5 - 0.005) * static_cast<double>(k) /
                                             static_cast<double>(nv - 1);
                for (const PsiValue& pv : ansatz_residuals(t, v)) {
                    r.max_abs = std::max(r.max_abs, std::abs(pv.value));
                    r.max_rel = std::max(r.max_rel, pv.rel());
                }
            }
        }
        r.pass = r.max_rel < tol;
        r.detail = "six monomial brackets on a (t,V) grid";
        return r;
    }

    // |J_MC - phi| <= 3 se (or 1e-4 relative when the model is deterministic)
    // plus the convexity probe under common random numbers
    std::vector<ResidualReport> check_mc(SimConfig cfg) const {
        std::vector<ResidualReport> out;
        Simulator sim(ValidatedParams::unchecked(p_), cf_);

        cfg.policy = {PolicySpec::Kind::optimal, 0.0};
        const ObjectiveEstimate est = sim.estimate_objective(cfg);
        const double phi0 = cf_.value({0.0, p_.X0_real, p_.L0_real, p_.V0});
        {
            ResidualReport r;
            r.name = "mc-value";
            r.grid_size = static_cast<std::size_t>(cfg.n_paths);
            r.max_abs = std::abs(est.mean - phi0);
            r.max_rel = std::abs(phi0) > 0 ? r.max_abs / std::abs(phi0) : r.max_abs;
            r.tolerance = std::max(3.0 * est.std_error, 1e-4 * std::abs(phi0));
            r.pass = r.max_abs <= r.tolerance;
            r.detail = "J_MC = " + std::to_string(est.mean) + " +- " +
                       std::to_string(est.std_error) + ", phi = " + std::to_string(phi0) +
                       ", aborted = " + std::to_string(est.aborted);
            out.push_back(r);
        }
        if (p_.beta2 == 0.0) {
            // with beta2 = 0 the running term is path-independent and the
            // weighted trapezoid reproduces it exactly
            const std::vector<PathResult> paths = sim.simulate_paths(cfg);
            double mean_running = 0.0;
            for (const PathResult& pr : paths) mean_running += pr.running_loss;
            mean_running /= static_cast<double>(paths.size());
            const double want = p_.alpha2 * p_.alpha2 *
                                (1.0 - std::exp(-p_.lambda_mort * p_.T));
            ResidualReport r;
            r.name = "mc-running-analytic";
            r.grid_size = static_cast<std::size_t>(cfg.n_paths);
            r.max_abs = std::abs(mean_running - want);
            r.max_rel = want != 0.0 ? r.max_abs / std::abs(want) : r.max_abs;
            r.tolerance = 1e-12;
            r.pass = r.max_rel <= r.tolerance;
            r.detail = "beta2 = 0: mean running loss vs alpha2^2 (1 - e^{-lambda T})";
            out.push_back(r);
        }
        {
            // paired differences along |d| chains share the seed (common
            // random numbers); each consecutive difference may dip below 0
            // by at most twice its own standard error
            ResidualReport r;
            r.name = "mc-convexity";
            r.grid_size = static_cast<std::size_t>(cfg.n_paths);
            r.tolerance = 0.0;
            r.pass = true;
            const double chain[] = {0.05, 0.10, 0.25};
            for (double sign : {+1.0, -1.0}) {
                SimConfig c0 = cfg;
                c0.policy = {PolicySpec::Kind::perturbed_optimal, 0.0};
                std::vector<PathResult> prev = sim.simulate_paths(c0);
                double prev_d = 0.0;
                for (double dmag : chain) {
                    SimConfig cd = cfg;
                    cd.policy = {PolicySpec::Kind::perturbed_optimal, sign * dmag};
                    std::vector<PathResult> cur = sim.simulate_paths(cd);
                    double mean = 0.0, se = 0.0;
                    paired_diff(cur, prev, mean, se);
                    const double slack = mean + 2.0 * se;
                    if (slack < 0.0) {
                        r.pass = false;
                        r.max_abs = std::max(r.max_abs, -slack);
                    }
                    r.detail += "J(" + std::to_string(sign * dmag) + ")-J(" +
                                std::to_string(sign * prev_d) + ") = " + std::to_string(mean) +
                                " +- " + std::to_string(se) + "; ";
                    prev = std::move(cur);
                    prev_d = dmag;
                }
            }
            out.push_back(r);
        }
        return out;
    }

    std::vector<ResidualReport> run_all(const SimConfig& mc_cfg) const {
        std::vector<ResidualReport> out;
        out.push_back(check_ode());
        out.push_back(check_hjb());
        out.push_back(check_hjb_quadratic());
        out.push_back(check_foc());
        out.push_back(check_ansatz());
        for (auto& r : check_mc(mc_cfg)) out.push_back(std::move(r));
        return out;
    }

    // second-order time derivative stencils; one-sided at the [0, T] ends
    template <class F>
    double time_derivative(const F& f, double t) const {
        const double h = 1e-6 * p_.T;
        if (t - h >= 0.0 && t + h <= p_.T) return (f(t + h) - f(t - h)) / (2.0 * h);
        if (t + h > p_.T)
            return (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h);
        return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h);
    }

private:
    static double nonzero_x(double x) {
        if (std::abs(x) < 1e-12)
            throw std::domain_error("weight-form policy is singular at x_bar ~ 0");
        return x;
    }

    static void paired_diff(const std::vector<PathResult>& a, const std::vector<PathResult>& b,
                            double& mean, double& se) {
        const std::size_t n = a.size();
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i].aborted || b[i].aborted) continue;
            sum += a[i].total() - b[i].total();
            ++used;
        }
        mean = sum / static_cast<double>(used);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i].aborted || b[i].aborted) continue;
            const double d = a[i].total() - b[i].total() - mean;
            ss += d * d;
        }
        se = used > 1 ? std::sqrt(ss / (static_cast<double>(used) - 1.0) /
                                  static_cast<double>(used))
                      : 0.0;
    }

    ModelParams p_;
    const ClosedForm& cf_;
    DerivedCoeffs c_;
};

} // namespace pensionjd
