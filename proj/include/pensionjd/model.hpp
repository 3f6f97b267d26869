#pragma once

// Model parameters for the DC pension problem, their validation, and the
// derived coefficient blocks (varpi_1..varpi_4 and a_1..a_5) used by the
// closed-form solution.
//
// Market:   dS0/S0 = (m + zeta^2/2) dt + zeta dW_r
//           dS/S   = mu_S dt + sigma_SS dW_S + eta_S dN_S
// Salary:   dL/L   = mu_L dt + sigma_LS dW_S + sqrt(V) dW_L
//                    + eta_LL dN_L + eta_Lc dN_c
// Variance: dV     = kappa (delta - V) dt + sigma_V sqrt(V) dW_V
//                    + eta_VV dN_V + eta_Vc dN_c
// Price:    dPi/Pi = mu_Pi dt + sigma_Pi dW_Pi + eta_Pi dN_Pi
//
// corr(W_r, W_Pi) = rho_Pir, corr(W_L, W_V) = rho_LV, all other pairs and all
// Poisson processes independent. All coefficients are constant in time.

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace pensionjd {

struct ModelParams {
    // riskless asset
    double m = 0.0;         // drift parameter (1/year)
    double zeta = 0.0;      // diffusion coefficient (1/sqrt(year))
    double r = 0.0;         // initial-price exponent, S0(0) = e^r

    // stock
    double mu_S = 0.0;      // appreciation rate
    double sigma_SS = 0.0;  // diffusion volatility
    double eta_S = 0.0;     // jump magnitude (> -1)
    double lambda_S = 0.0;  // jump intensity

    // salary
    double mu_L = 0.0;      // salary drift
    double sigma_LS = 0.0;  // loading on the stock's Brownian noise
    double eta_LL = 0.0;    // own-jump magnitude (> -1)
    double eta_Lc = 0.0;    // common-shock jump magnitude (> -1)
    double lambda_L = 0.0;  // own-jump intensity
    double lambda_c = 0.0;  // common-shock intensity

    // salary variance (square-root process with additive jumps)
    double kappa = 0.0;     // mean-reversion rate
    double delta = 0.0;     // long-run variance
    double sigma_V = 0.0;   // vol-of-vol
    double eta_VV = 0.0;    // own-jump size, additive (>= 0)
    double eta_Vc = 0.0;    // common-shock jump size, additive (>= 0)
    double lambda_V = 0.0;  // own-jump intensity

    // price index
    double mu_Pi = 0.0;     // expected inflation rate
    double sigma_Pi = 0.0;  // inflation volatility
    double eta_Pi = 0.0;    // jump magnitude (> -1)
    double lambda_Pi = 0.0; // jump intensity

    // correlations
    double rho_Pir = 0.0;   // corr(W_r, W_Pi)
    double rho_LV = 0.0;    // corr(W_L, W_V)

    // plan and objective
    double xi = 0.0;          // contribution rate, fraction of salary
    double lambda_mort = 0.0; // constant mortality intensity
    double T = 0.0;           // retirement horizon (years)
    double alpha1 = 0.0, beta1 = 0.0, X1_star = 0.0; // terminal-loss parameters
    double alpha2 = 0.0, beta2 = 0.0, X2_star = 0.0; // death-loss parameters

    // initial state
    double X0_real = 0.0;   // initial real wealth
    double L0_real = 0.0;   // initial real salary
    double V0 = 0.0;        // initial variance
};

struct DerivedCoeffs {
    double varpi1 = 0.0, varpi2 = 0.0, varpi3 = 0.0, varpi4 = 0.0;
    double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a5 = 0.0;
};

// Arguments of the value function and the policy.
struct State {
    double t = 0.0;       // time in [0, T]
    double x_bar = 0.0;   // real wealth
    double l_bar = 0.0;   // real salary
    double v = 0.0;       // instantaneous variance, >= 0
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string what, std::vector<std::string> violations)
        : std::runtime_error(std::move(what)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const { return violations_; }
private:
    std::vector<std::string> violations_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(std::vector<std::string>& out, bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
}

inline std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

} // namespace detail

// Checks every invariant and returns the complete list of violations
// (empty means the parameter set is valid).
inline std::vector<std::string> check_params(const ModelParams& p) {
    using detail::num;
    using detail::require;
    std::vector<std::string> v;

    const struct { const char* name; double value; } fields[] = {
        {"m", p.m}, {"zeta", p.zeta}, {"r", p.r},
        {"mu_S", p.mu_S}, {"sigma_SS", p.sigma_SS}, {"eta_S", p.eta_S}, {"lambda_S", p.lambda_S},
        {"mu_L", p.mu_L}, {"sigma_LS", p.sigma_LS}, {"eta_LL", p.eta_LL}, {"eta_Lc", p.eta_Lc},
        {"lambda_L", p.lambda_L}, {"lambda_c", p.lambda_c},
        {"kappa", p.kappa}, {"delta", p.delta}, {"sigma_V", p.sigma_V},
        {"eta_VV", p.eta_VV}, {"eta_Vc", p.eta_Vc}, {"lambda_V", p.lambda_V},
        {"mu_Pi", p.mu_Pi}, {"sigma_Pi", p.sigma_Pi}, {"eta_Pi", p.eta_Pi}, {"lambda_Pi", p.lambda_Pi},
        {"rho_Pir", p.rho_Pir}, {"rho_LV", p.rho_LV},
        {"xi", p.xi}, {"lambda_mort", p.lambda_mort}, {"T", p.T},
        {"alpha1", p.alpha1}, {"beta1", p.beta1}, {"X1_star", p.X1_star},
        {"alpha2", p.alpha2}, {"beta2", p.beta2}, {"X2_star", p.X2_star},
        {"X0_real", p.X0_real}, {"L0_real", p.L0_real}, {"V0", p.V0},
    };
    for (const auto& f : fields)
        require(v, std::isfinite(f.value), std::string(f.name) + " must be finite, got " + num(f.value));
    if (!v.empty()) return v; // comparisons below are meaningless on NaN

    // multiplicative jumps must keep their processes positive
    require(v, p.eta_S > -1.0, "eta_S > -1 violated: eta_S = " + num(p.eta_S));
    require(v, p.eta_LL > -1.0, "eta_LL > -1 violated: eta_LL = " + num(p.eta_LL));
    require(v, p.eta_Lc > -1.0, "eta_Lc > -1 violated: eta_Lc = " + num(p.eta_Lc));
    require(v, p.eta_Pi > -1.0, "eta_Pi > -1 violated: eta_Pi = " + num(p.eta_Pi));

    // variance jumps are additive, so only nonnegativity keeps V >= 0
    require(v, p.eta_VV >= 0.0, "eta_VV >= 0 violated: eta_VV = " + num(p.eta_VV));
    require(v, p.eta_Vc >= 0.0, "eta_Vc >= 0 violated: eta_Vc = " + num(p.eta_Vc));

    // Feller-type condition for the variance diffusion
    require(v, 2.0 * p.kappa * p.delta > p.sigma_V * p.sigma_V,
            "2*kappa*delta > sigma_V^2 violated: 2*kappa*delta = " + num(2.0 * p.kappa * p.delta) +
                ", sigma_V^2 = " + num(p.sigma_V * p.sigma_V));

    require(v, p.rho_Pir > -1.0 && p.rho_Pir < 1.0,
            "rho_Pir in (-1,1) violated: rho_Pir = " + num(p.rho_Pir));
    require(v, p.rho_LV > -1.0 && p.rho_LV < 1.0,
            "rho_LV in (-1,1) violated: rho_LV = " + num(p.rho_LV));
    require(v, p.xi >= 0.0 && p.xi <= 1.0, "xi in [0,1] violated: xi = " + num(p.xi));
    require(v, p.T > 0.0, "T > 0 violated: T = " + num(p.T));
    require(v, p.lambda_mort >= 0.0, "lambda_mort >= 0 violated: lambda_mort = " + num(p.lambda_mort));

    // under funding must be penalized more than over funding
    require(v, p.alpha1 > 0.0, "alpha1 > 0 violated: alpha1 = " + num(p.alpha1));
    require(v, p.alpha2 > 0.0, "alpha2 > 0 violated: alpha2 = " + num(p.alpha2));
    require(v, p.beta1 < 0.0, "beta1 < 0 violated: beta1 = " + num(p.beta1));
    require(v, p.beta2 < 0.0, "beta2 < 0 violated: beta2 = " + num(p.beta2));

    require(v, p.V0 > 0.0, "V0 > 0 violated: V0 = " + num(p.V0));
    require(v, p.X0_real > 0.0, "X0_real > 0 violated: X0_real = " + num(p.X0_real));
    require(v, p.L0_real > 0.0, "L0_real > 0 violated: L0_real = " + num(p.L0_real));

    require(v, p.lambda_S >= 0.0, "lambda_S >= 0 violated: lambda_S = " + num(p.lambda_S));
    require(v, p.lambda_L >= 0.0, "lambda_L >= 0 violated: lambda_L = " + num(p.lambda_L));
    require(v, p.lambda_c >= 0.0, "lambda_c >= 0 violated: lambda_c = " + num(p.lambda_c));
    require(v, p.lambda_V >= 0.0, "lambda_V >= 0 violated: lambda_V = " + num(p.lambda_V));
    require(v, p.lambda_Pi >= 0.0, "lambda_Pi >= 0 violated: lambda_Pi = " + num(p.lambda_Pi));

    // varpi4 is the denominator of the optimal weight; it must be positive
    const double varpi4 = p.zeta * p.zeta + p.sigma_SS * p.sigma_SS + p.lambda_S * p.eta_S * p.eta_S;
    require(v, varpi4 > 0.0,
            "varpi4 > 0 violated: zeta^2 + sigma_SS^2 + lambda_S*eta_S^2 = " + num(varpi4));

    return v;
}

// A parameter set that has passed check_params. Immutable.
class ValidatedParams {
public:
    explicit ValidatedParams(const ModelParams& p) : p_(p) {
        auto violations = check_params(p);
        if (!violations.empty()) {
            std::string what = "invalid model parameters (" +
                               std::to_string(violations.size()) + " violation(s)):";
            for (const auto& s : violations) what += "\n  - " + s;
            throw ValidationError(what, std::move(violations));
        }
    }

    // Escape hatch for degenerate oracle studies (e.g. beta2 = 0) that the
    // closed forms handle but the modeling constraints exclude.
    static ValidatedParams unchecked(const ModelParams& p) { return ValidatedParams(p, 0); }

    const ModelParams& get() const { return p_; }
    const ModelParams* operator->() const { return &p_; }

private:
    ValidatedParams(const ModelParams& p, int) : p_(p) {}
    ModelParams p_;
};

// varpi_1 = mu_S - (m + zeta^2/2) + zeta sigma_Pi rho_Pir + lambda_S eta_S
// varpi_2 = zeta sigma_Pi rho_Pir + sigma_SS sigma_LS
// varpi_3 = zeta sigma_Pi rho_Pir - zeta^2
// varpi_4 = zeta^2 + sigma_SS^2 + lambda_S eta_S^2
inline void derive_varpi(const ValidatedParams& vp, DerivedCoeffs& c) {
    const ModelParams& p = vp.get();
    const double mz = p.m + 0.5 * p.zeta * p.zeta;
    const double zr = p.zeta * p.sigma_Pi * p.rho_Pir;
    c.varpi1 = p.mu_S - mz + zr + p.lambda_S * p.eta_S;
    c.varpi2 = zr + p.sigma_SS * p.sigma_LS;
    c.varpi3 = zr - p.zeta * p.zeta;
    c.varpi4 = p.zeta * p.zeta + p.sigma_SS * p.sigma_SS + p.lambda_S * p.eta_S * p.eta_S;
}

// a_1..a_5 from the monomial decomposition of the pi-reduced HJB equation.
// The salary jump magnitude eta_L there is the own-jump size eta_LL.
inline void derive_a(const ValidatedParams& vp, DerivedCoeffs& c) {
    const ModelParams& p = vp.get();
    const double mz = p.m + 0.5 * p.zeta * p.zeta;
    const double zr = p.zeta * p.sigma_Pi * p.rho_Pir;
    const double sPi2 = p.sigma_Pi * p.sigma_Pi;
    const double j = p.eta_Pi * p.eta_Pi - p.eta_Pi;   // inflation jump factor on real quantities
    const double jq = j * j + 2.0 * j;                 // (1+j)^2 - 1
    const double lam = p.lambda_mort;

    c.a1 = p.zeta * p.zeta - 4.0 * zr - lam + 2.0 * (mz - p.mu_Pi + sPi2) + sPi2 +
           p.lambda_Pi * jq - (c.varpi1 + c.varpi3) * (c.varpi1 + c.varpi3) / c.varpi4;
    c.a2 = mz - p.mu_Pi + sPi2 - zr - lam + p.lambda_Pi * j -
           c.varpi1 * (c.varpi1 + c.varpi3) / c.varpi4;
    c.a3 = 2.0 * (p.mu_L - p.mu_Pi + sPi2) + p.sigma_LS * p.sigma_LS + sPi2 - lam +
           p.lambda_L * p.eta_LL * p.eta_LL + 2.0 * p.lambda_L * p.eta_LL + p.lambda_Pi * jq;
    c.a4 = p.mu_L - p.mu_Pi + sPi2 - lam + p.lambda_L * p.eta_LL + p.lambda_Pi * j;
    c.a5 = mz - 2.0 * p.mu_Pi + 3.0 * sPi2 - 2.0 * zr + p.mu_L + p.lambda_L * p.eta_LL +
           p.lambda_Pi * jq - lam -
           (c.varpi1 * c.varpi1 + c.varpi1 * c.varpi2 + c.varpi1 * c.varpi3 +
            c.varpi2 * c.varpi3) / c.varpi4;
}

inline DerivedCoeffs derive_coeffs(const ValidatedParams& vp) {
    DerivedCoeffs c;
    derive_varpi(vp, c);
    derive_a(vp, c);
    return c;
}

// --- JSON config I/O ----------------------------------------------------
//
// The config is a flat JSON object whose keys match the field names exactly.
// Unknown keys are an error (catches typos), missing keys are an error.

namespace detail {

template <class F>
inline void for_each_field(ModelParams& p, F&& f) {
    f("m", p.m); f("zeta", p.zeta); f("r", p.r);
    f("mu_S", p.mu_S); f("sigma_SS", p.sigma_SS); f("eta_S", p.eta_S); f("lambda_S", p.lambda_S);
    f("mu_L", p.mu_L); f("sigma_LS", p.sigma_LS); f("eta_LL", p.eta_LL); f("eta_Lc", p.eta_Lc);
    f("lambda_L", p.lambda_L); f("lambda_c", p.lambda_c);
    f("kappa", p.kappa); f("delta", p.delta); f("sigma_V", p.sigma_V);
    f("eta_VV", p.eta_VV); f("eta_Vc", p.eta_Vc); f("lambda_V", p.lambda_V);
    f("mu_Pi", p.mu_Pi); f("sigma_Pi", p.sigma_Pi); f("eta_Pi", p.eta_Pi); f("lambda_Pi", p.lambda_Pi);
    f("rho_Pir", p.rho_Pir); f("rho_LV", p.rho_LV);
    f("xi", p.xi); f("lambda_mort", p.lambda_mort); f("T", p.T);
    f("alpha1", p.alpha1); f("beta1", p.beta1); f("X1_star", p.X1_star);
    f("alpha2", p.alpha2); f("beta2", p.beta2); f("X2_star", p.X2_star);
    f("X0_real", p.X0_real); f("L0_real", p.L0_real); f("V0", p.V0);
}

} // namespace detail

inline ModelParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ModelParams p;
    std::vector<std::string> known;
    std::vector<std::string> missing;
    detail::for_each_field(p, [&](const char* name, double& field) {
        known.emplace_back(name);
        auto it = j.find(name);
        if (it == j.end()) {
            missing.emplace_back(name);
            return;
        }
        if (!it->is_number()) throw ConfigError(std::string("config key '") + name + "' must be a number");
        field = it->get<double>();
    });
    std::vector<std::string> unknown;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            unknown.push_back(it.key());
    }
    if (!missing.empty() || !unknown.empty()) {
        std::string msg = "bad config:";
        for (const auto& k : missing) msg += "\n  missing key: " + k;
        for (const auto& k : unknown) msg += "\n  unknown key: " + k;
        throw ConfigError(msg);
    }
    return p;
}

inline nlohmann::json params_to_json(const ModelParams& p) {
    nlohmann::json j = nlohmann::json::object();
    detail::for_each_field(const_cast<ModelParams&>(p),
                           [&](const char* name, double& field) { j[name] = field; });
    return j;
}

inline ModelParams load_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    }
    return params_from_json(j);
}

} // namespace pensionjd
