#pragma once

// Quadrature kernels used by the closed-form evaluators: adaptive Simpson
// with a running error estimate, and fixed-order Gauss-Legendre.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pensionjd {

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved_error)
        : std::runtime_error(what + " (achieved error estimate " +
                             std::to_string(achieved_error) + ")"),
          achieved_error_(achieved_error) {}
    double achieved_error() const { return achieved_error_; }
private:
    double achieved_error_;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

namespace detail {

template <class F>
void adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                          double whole, double tol, int depth, int max_depth,
                          QuadratureResult& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= max_depth || std::abs(delta) <= 15.0 * tol) {
        if (depth >= max_depth && std::abs(delta) > 15.0 * tol) out.converged = false;
        out.value += left + right + delta / 15.0; // Richardson correction
        out.error_estimate += std::abs(delta) / 15.0;
        return;
    }
    adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth, out);
    adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth, out);
}

} // namespace detail

// Integrates f over [a, b] to absolute tolerance abs_tol.
template <class F>
QuadratureResult adaptive_simpson(const F& f, double a, double b,
                                  double abs_tol = 1e-10, int max_depth = 40) {
    QuadratureResult out;
    if (a == b) return out;
    double sign = 1.0;
    if (b < a) { std::swap(a, b); sign = -1.0; }
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, 0, max_depth, out);
    out.value *= sign;
    return out;
}

// As above, but non-convergence is an error.
template <class F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-10, int max_depth = 40,
                 const char* what = "adaptive quadrature") {
    QuadratureResult r = adaptive_simpson(f, a, b, abs_tol, max_depth);
    if (!r.converged)
        throw QuadratureError(std::string(what) + " did not converge", r.error_estimate);
    return r.value;
}

// 64-point Gauss-Legendre rule on [-1, 1]. Nodes and weights are computed
// once by Newton iteration on P_64; thread-safe via static initialization.
class GaussLegendre64 {
public:
    static constexpr int n = 64;

    static const GaussLegendre64& instance() {
        static const GaussLegendre64 gl;
        return gl;
    }

    template <class F>
    double operator()(const F& f, double a, double b) const {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += w_[i] * f(mid + half * x_[i]);
        return half * acc;
    }

private:
    GaussLegendre64() {
        for (int i = 0; i < n / 2; ++i) {
            // Chebyshev-like initial guess, then Newton on P_n
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            x_[i] = -x;
            x_[n - 1 - i] = x;
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            w_[i] = w;
            w_[n - 1 - i] = w;
        }
    }

    std::array<double, n> x_{};
    std::array<double, n> w_{};
};

template <class F>
double gauss_legendre64(const F& f, double a, double b) {
    return GaussLegendre64::instance()(f, a, b);
}

} // namespace pensionjd
