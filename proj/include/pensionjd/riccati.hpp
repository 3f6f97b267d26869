#pragma once

// Closed-form solution of the scalar Riccati terminal-value problem
//
//   phi32'(t) = -1/2 sigma_V^2 phi32^2 - b phi32 - 1,   phi32(tau) = 0,
//
// with b = 2 sigma_V rho_LV - kappa, split on the sign of the discriminant
// Delta_3 = b^2 - 2 sigma_V^2 of  -1/2 sigma_V^2 h^2 - b h - 1 = 0.
//
// Every branch is written so that it satisfies the ODE (slope -1 at t = tau);
// the backward ODE integrator in the verify module is the ground truth.

#include <cmath>
#include <stdexcept>

#include "pensionjd/model.hpp"

namespace pensionjd {

// integral of e^{a s} over [0, h]; 4-term Taylor series near a*h = 0
inline double growth_integral(double a, double h) {
    const double x = a * h;
    if (std::abs(x) < 1e-8)
        return h * (1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0)));
    return std::expm1(x) / a;
}

enum class RiccatiCase { positive, zero, negative };

struct RiccatiSolution {
    double b = 0.0;            // 2 sigma_V rho_LV - kappa
    double sigma_V2 = 0.0;     // sigma_V^2
    double discriminant = 0.0; // Delta_3
    RiccatiCase case_tag = RiccatiCase::positive;
    double h1 = 0.0, h2 = 0.0; // roots (-b +- sqrt(Delta_3)) / sigma_V^2, positive case only

    static RiccatiSolution make(const ModelParams& p) {
        RiccatiSolution r;
        r.b = 2.0 * p.sigma_V * p.rho_LV - p.kappa;
        r.sigma_V2 = p.sigma_V * p.sigma_V;
        r.discriminant = r.b * r.b - 2.0 * r.sigma_V2;
        if (std::abs(r.discriminant) < 1e-12) {
            r.case_tag = RiccatiCase::zero;
        } else if (r.discriminant > 0.0) {
            r.case_tag = RiccatiCase::positive;
            if (r.sigma_V2 > 0.0) {
                // large-magnitude root first, the other via the product 2/sigma_V^2
                const double sq = std::sqrt(r.discriminant);
                if (r.b < 0.0) {
                    r.h1 = (-r.b + sq) / r.sigma_V2;
                    r.h2 = 2.0 / (-r.b + sq);
                } else {
                    r.h2 = (-r.b - sq) / r.sigma_V2;
                    r.h1 = 2.0 / (-r.b - sq);
                }
            }
        } else {
            r.case_tag = RiccatiCase::negative;
        }
        return r;
    }

    // phi32(t; tau) for 0 <= t <= tau
    double operator()(double t, double tau) const {
        if (t > tau) throw std::domain_error("riccati_phi32: t > tau");
        const double u = tau - t;
        if (u == 0.0) return 0.0;

        // sigma_V = 0 degenerates to the linear equation g' = 1 + b g
        if (sigma_V2 < 1e-30 * std::max(1.0, b * b)) return growth_integral(b, u);

        switch (case_tag) {
        case RiccatiCase::positive: {
            const double e = std::exp(-std::sqrt(discriminant) * u);
            const double den = h2 * e - h1;
            // den starts at h2 - h1 < 0; it can only reach 0 when b > 0,
            // where the Riccati solution genuinely blows up
            if (!(den < 0.0))
                throw std::domain_error("riccati_phi32: solution blows up before requested time");
            return h1 * h2 * (e - 1.0) / den;
        }
        case RiccatiCase::zero: {
            const double den = 1.0 - 0.5 * b * u;
            if (!(den > 0.0))
                throw std::domain_error("riccati_phi32: solution blows up before requested time");
            return b / (sigma_V2 * den) - b / sigma_V2;
        }
        case RiccatiCase::negative: {
            const double sq = std::sqrt(-discriminant);
            const double theta = std::atan(b / sq) + 0.5 * sq * u;
            if (theta >= M_PI_2)
                throw std::domain_error("riccati_phi32: solution blows up before requested time");
            return sq / sigma_V2 * std::tan(theta) - b / sigma_V2;
        }
        }
        return 0.0; // unreachable
    }
};

} // namespace pensionjd
