#pragma once

// Monte Carlo simulation of the coupled real-wealth / real-salary / variance
// system under a configurable policy, and estimation of the objective
//
//   J = E[ int_0^T (alpha2 + beta2 (X(s) - X2*))^2 lambda e^{-lambda s} ds
//          + (alpha1 + beta1 (X(T) - X1*))^2 e^{-lambda T} ].
//
// Default mode integrates the real system exactly as the closed form solves
// it ("model-as-written"); the exact-quotient mode simulates nominal wealth,
// salary and the price index and divides, which quantifies the second-order
// inflation-jump truncation (eta_Pi^2 - eta_Pi vs 1/(1+eta_Pi) - 1).
//
// Paths derive independent random streams from (seed, path index), and the
// estimate is reduced in path order, so results are bit-identical for a given
// (seed, n_paths, steps_per_year) regardless of threading.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pensionjd/closedform.hpp"
#include "pensionjd/model.hpp"
#include "pensionjd/rng.hpp"

namespace pensionjd {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PolicySpec {
    enum class Kind { optimal, constant_weight, perturbed_optimal };
    Kind kind = Kind::optimal;
    double param = 0.0; // weight w, or offset d
};

enum class SimMode { model_as_written, exact_quotient };

struct SimConfig {
    std::int64_t n_paths = 10000;
    int steps_per_year = 252;
    std::uint64_t seed = 0;
    PolicySpec policy{};
    SimMode mode = SimMode::model_as_written;
};

struct StepIncrements {
    double dw_r = 0.0, dw_s = 0.0, dw_l = 0.0, dw_v = 0.0, dw_pi = 0.0;
    int dn_s = 0, dn_l = 0, dn_c = 0, dn_v = 0, dn_pi = 0;
};

struct PathResult {
    double terminal_x_bar = 0.0;
    double running_loss = 0.0;
    double terminal_loss = 0.0;
    bool aborted = false;
    double total() const { return running_loss + terminal_loss; }
};

struct ObjectiveEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_paths = 0;
    std::int64_t aborted = 0;
};

// Correlated Gaussian and Poisson increments for one step. The two Cholesky
// pairs are (W_r, W_Pi) with rho_Pir and (W_L, W_V) with rho_LV.
class IncrementSampler {
public:
    IncrementSampler(const ModelParams& p, double dt)
        : dt_(dt), sqrt_dt_(std::sqrt(dt)),
          c_pi_(std::sqrt(1.0 - p.rho_Pir * p.rho_Pir)), rho_pir_(p.rho_Pir),
          c_v_(std::sqrt(1.0 - p.rho_LV * p.rho_LV)), rho_lv_(p.rho_LV) {
        if (!(dt > 0.0)) throw std::domain_error("draw_increments: dt must be positive");
        const double lams[5] = {p.lambda_S, p.lambda_L, p.lambda_c, p.lambda_V, p.lambda_Pi};
        for (int i = 0; i < 5; ++i) {
            mean_[i] = lams[i] * dt;
            exp_neg_mean_[i] = std::exp(-mean_[i]);
        }
    }

    StepIncrements draw(RngStream& rng) const {
        // fixed draw order: 5 normals (r, S, L, V, Pi), then 5 counts (S, L, c, V, Pi)
        const double zr = rng.normal();
        const double zs = rng.normal();
        const double zl = rng.normal();
        const double zv = rng.normal();
        const double zp = rng.normal();
        StepIncrements inc;
        inc.dw_r = sqrt_dt_ * zr;
        inc.dw_s = sqrt_dt_ * zs;
        inc.dw_l = sqrt_dt_ * zl;
        inc.dw_v = sqrt_dt_ * (rho_lv_ * zl + c_v_ * zv);
        inc.dw_pi = sqrt_dt_ * (rho_pir_ * zr + c_pi_ * zp);
        inc.dn_s = rng.poisson(mean_[0], exp_neg_mean_[0]);
        inc.dn_l = rng.poisson(mean_[1], exp_neg_mean_[1]);
        inc.dn_c = rng.poisson(mean_[2], exp_neg_mean_[2]);
        inc.dn_v = rng.poisson(mean_[3], exp_neg_mean_[3]);
        inc.dn_pi = rng.poisson(mean_[4], exp_neg_mean_[4]);
        return inc;
    }

    double dt() const { return dt_; }

private:
    double dt_, sqrt_dt_;
    double c_pi_, rho_pir_, c_v_, rho_lv_;
    double mean_[5] = {}, exp_neg_mean_[5] = {};
};

class Simulator {
public:
    Simulator(const ValidatedParams& vp, const ClosedForm& cf)
        : p_(vp.get()), cf_(cf) {}

    StepIncrements draw_increments(RngStream& rng, double dt) const {
        return IncrementSampler(p_, dt).draw(rng);
    }

    // One Euler step of the real system. `amount` is the invested amount
    // pi * X evaluated at the pre-step state; all right-hand sides use
    // left limits. Variance uses full truncation and is clamped at zero
    // after its additive jumps.
    State step_state(const State& s, const StepIncrements& inc, double amount,
                     double dt) const {
        const double mz = p_.m + 0.5 * p_.zeta * p_.zeta;
        const double j = p_.eta_Pi * p_.eta_Pi - p_.eta_Pi;
        const double vp = std::max(s.v, 0.0);
        const double sqv = std::sqrt(vp);

        double v_new = s.v + p_.kappa * (p_.delta - vp) * dt + p_.sigma_V * sqv * inc.dw_v +
                       p_.eta_VV * inc.dn_v + p_.eta_Vc * inc.dn_c;
        v_new = std::max(v_new, 0.0);

        const double l_new =
            s.l_bar * (1.0 + (p_.mu_L - p_.mu_Pi + p_.sigma_Pi * p_.sigma_Pi) * dt +
                       p_.sigma_LS * inc.dw_s + sqv * inc.dw_l - p_.sigma_Pi * inc.dw_pi +
                       p_.eta_LL * inc.dn_l + p_.eta_Lc * inc.dn_c + j * inc.dn_pi);

        const double x_new =
            s.x_bar * (1.0 +
                       (mz - p_.mu_Pi + p_.sigma_Pi * p_.sigma_Pi -
                        p_.zeta * p_.sigma_Pi * p_.rho_Pir) * dt +
                       p_.zeta * inc.dw_r - p_.sigma_Pi * inc.dw_pi + j * inc.dn_pi) +
            amount * ((p_.mu_S - mz + p_.zeta * p_.sigma_Pi * p_.rho_Pir) * dt +
                      p_.sigma_SS * inc.dw_s - p_.zeta * inc.dw_r + p_.eta_S * inc.dn_s) +
            p_.xi * s.l_bar * dt;

        return {s.t + dt, x_new, l_new, v_new};
    }

    std::vector<PathResult> simulate_paths(const SimConfig& cfg) const {
        if (cfg.n_paths < 1) throw std::domain_error("n_paths must be >= 1");
        if (cfg.steps_per_year < 1) throw std::domain_error("steps_per_year must be >= 1");
        const std::int64_t n_steps =
            std::max<std::int64_t>(1, std::llround(p_.T * cfg.steps_per_year));
        const double dt = p_.T / static_cast<double>(n_steps);

        // policy coefficients at every step time, shared read-only by all threads
        std::vector<double> g1(n_steps), g2(n_steps), g5(n_steps);
        const bool needs_phi = cfg.policy.kind != PolicySpec::Kind::constant_weight;
        if (needs_phi) {
            for (std::int64_t k = 0; k < n_steps; ++k) {
                const double t = k * dt;
                g1[k] = cf_.phi1(t);
                g2[k] = cf_.phi2(t);
                g5[k] = cf_.phi5_cached(t);
            }
        }
        const IncrementSampler sampler(p_, dt);

        std::vector<PathResult> results(static_cast<std::size_t>(cfg.n_paths));
        const auto run_range = [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t i = lo; i < hi; ++i) {
                RngStream rng = RngStream::for_path(cfg.seed, static_cast<std::uint64_t>(i));
                results[static_cast<std::size_t>(i)] =
                    (cfg.mode == SimMode::model_as_written)
                        ? run_path_written(cfg, sampler, rng, n_steps, dt, g1, g2, g5)
                        : run_path_quotient(cfg, sampler, rng, n_steps, dt, g1, g2, g5);
            }
        };

        unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
        if (static_cast<std::int64_t>(n_threads) > cfg.n_paths)
            n_threads = static_cast<unsigned>(cfg.n_paths);
        if (n_threads <= 1) {
            run_range(0, cfg.n_paths);
        } else {
            std::vector<std::thread> pool;
            const std::int64_t chunk = (cfg.n_paths + n_threads - 1) / n_threads;
            for (unsigned w = 0; w < n_threads; ++w) {
                const std::int64_t lo = w * chunk;
                const std::int64_t hi = std::min<std::int64_t>(cfg.n_paths, lo + chunk);
                if (lo >= hi) break;
                pool.emplace_back(run_range, lo, hi);
            }
            for (auto& th : pool) th.join();
        }
        return results;
    }

    // Mean and standard error of the per-path losses, in path order.
    // More than 0.1% aborted paths fails the run.
    ObjectiveEstimate estimate_objective(const SimConfig& cfg) const {
        const std::vector<PathResult> paths = simulate_paths(cfg);
        return reduce_objective(paths);
    }

    static ObjectiveEstimate reduce_objective(const std::vector<PathResult>& paths) {
        ObjectiveEstimate est;
        est.n_paths = static_cast<std::int64_t>(paths.size());
        double sum = 0.0, comp = 0.0;
        for (const PathResult& r : paths) {
            if (r.aborted) {
                ++est.aborted;
                continue;
            }
            const double y = r.total() - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        const std::int64_t used = est.n_paths - est.aborted;
        if (est.aborted * 1000 > est.n_paths)
            throw SimulationError("more than 0.1% of paths aborted (" +
                                  std::to_string(est.aborted) + " of " +
                                  std::to_string(est.n_paths) + ")");
        if (used == 0) throw SimulationError("all paths aborted");
        est.mean = sum / static_cast<double>(used);
        double ss = 0.0;
        for (const PathResult& r : paths) {
            if (r.aborted) continue;
            const double d = r.total() - est.mean;
            ss += d * d;
        }
        est.std_error = used > 1 ? std::sqrt(ss / (static_cast<double>(used) - 1.0) /
                                             static_cast<double>(used))
                                 : 0.0;
        return est;
    }

    const ModelParams& params() const { return p_; }

private:
    double policy_amount(const SimConfig& cfg, std::int64_t k, double x, double l,
                         const std::vector<double>& g1, const std::vector<double>& g2,
                         const std::vector<double>& g5) const {
        switch (cfg.policy.kind) {
        case PolicySpec::Kind::constant_weight:
            return cfg.policy.param * x;
        case PolicySpec::Kind::optimal:
            return ClosedForm::amount_from(g1[k], g2[k], g5[k], cf_.coeffs(), x, l);
        case PolicySpec::Kind::perturbed_optimal:
            return ClosedForm::amount_from(g1[k], g2[k], g5[k], cf_.coeffs(), x, l) +
                   cfg.policy.param * x;
        }
        return 0.0;
    }

    // running loss: the mortality weight lambda e^{-lambda s} is integrated
    // exactly per segment, the squared deviation enters by the trapezoid rule
    struct LossAccumulator {
        const ModelParams& p;
        double lambda, prev_q = 0.0, acc = 0.0;
        explicit LossAccumulator(const ModelParams& pp, double x0) : p(pp), lambda(pp.lambda_mort) {
            prev_q = q(x0);
        }
        double q(double x) const {
            const double d = p.alpha2 + p.beta2 * (x - p.X2_star);
            return d * d;
        }
        void step(double s0, double s1, double x1) {
            const double q1 = q(x1);
            acc += (std::exp(-lambda * s0) - std::exp(-lambda * s1)) * 0.5 * (prev_q + q1);
            prev_q = q1;
        }
        double terminal(double xT) const {
            const double d = p.alpha1 + p.beta1 * (xT - p.X1_star);
            return std::exp(-lambda * p.T) * d * d;
        }
    };

    PathResult run_path_written(const SimConfig& cfg, const IncrementSampler& sampler,
                                RngStream& rng, std::int64_t n_steps, double dt,
                                const std::vector<double>& g1, const std::vector<double>& g2,
                                const std::vector<double>& g5) const {
        State s{0.0, p_.X0_real, p_.L0_real, p_.V0};
        LossAccumulator loss(p_, s.x_bar);
        for (std::int64_t k = 0; k < n_steps; ++k) {
            const StepIncrements inc = sampler.draw(rng);
            const double amount = policy_amount(cfg, k, s.x_bar, s.l_bar, g1, g2, g5);
            s = step_state(s, inc, amount, dt);
            if (!std::isfinite(s.x_bar) || !std::isfinite(s.l_bar) || !std::isfinite(s.v)) {
                PathResult r;
                r.aborted = true;
                r.terminal_x_bar = std::numeric_limits<double>::quiet_NaN();
                return r;
            }
            loss.step(k * dt, (k + 1) * dt, s.x_bar);
        }
        PathResult r;
        r.terminal_x_bar = s.x_bar;
        r.running_loss = loss.acc;
        r.terminal_loss = loss.terminal(s.x_bar);
        return r;
    }

    // nominal X, L, Pi plus variance; real quantities by division, inflation
    // jumps divide by (1 + eta_Pi) instead of the truncated factor
    PathResult run_path_quotient(const SimConfig& cfg, const IncrementSampler& sampler,
                                 RngStream& rng, std::int64_t n_steps, double dt,
                                 const std::vector<double>& g1, const std::vector<double>& g2,
                                 const std::vector<double>& g5) const {
        const double mz = p_.m + 0.5 * p_.zeta * p_.zeta;
        double X = p_.X0_real, L = p_.L0_real, Pi = 1.0, V = p_.V0;
        LossAccumulator loss(p_, X / Pi);
        for (std::int64_t k = 0; k < n_steps; ++k) {
            const StepIncrements inc = sampler.draw(rng);
            const double x_bar = X / Pi, l_bar = L / Pi;
            const double amount_nominal =
                policy_amount(cfg, k, x_bar, l_bar, g1, g2, g5) * Pi;
            const double vp = std::max(V, 0.0);
            const double sqv = std::sqrt(vp);

            double v_new = V + p_.kappa * (p_.delta - vp) * dt + p_.sigma_V * sqv * inc.dw_v +
                           p_.eta_VV * inc.dn_v + p_.eta_Vc * inc.dn_c;
            v_new = std::max(v_new, 0.0);
            const double L_new = L * (1.0 + p_.mu_L * dt + p_.sigma_LS * inc.dw_s +
                                      sqv * inc.dw_l + p_.eta_LL * inc.dn_l +
                                      p_.eta_Lc * inc.dn_c);
            const double Pi_new = Pi * (1.0 + p_.mu_Pi * dt + p_.sigma_Pi * inc.dw_pi +
                                        p_.eta_Pi * inc.dn_pi);
            const double X_new = X * (1.0 + mz * dt + p_.zeta * inc.dw_r) +
                                 amount_nominal * ((p_.mu_S - mz) * dt + p_.sigma_SS * inc.dw_s -
                                                   p_.zeta * inc.dw_r + p_.eta_S * inc.dn_s) +
                                 p_.xi * L * dt;
            X = X_new;
            L = L_new;
            Pi = Pi_new;
            V = v_new;
            if (!std::isfinite(X) || !std::isfinite(L) || !std::isfinite(Pi) ||
                !std::isfinite(V) || Pi <= 0.0) {
                PathResult r;
                r.aborted = true;
                r.terminal_x_bar = std::numeric_limits<double>::quiet_NaN();
                return r;
            }
            loss.step(k * dt, (k + 1) * dt, X / Pi);
        }
        PathResult r;
        r.terminal_x_bar = X / Pi;
        r.running_loss = loss.acc;
        r.terminal_loss = loss.terminal(X / Pi);
        return r;
    }

    ModelParams p_;
    const ClosedForm& cf_;
};

// First moments of the nominal stock, nominal salary and the variance:
//   E[S(t)]/S(0) = e^{(mu_S + lambda_S eta_S) t}
//   E[L(t)]/L(0) = e^{(mu_L + lambda_L eta_LL + lambda_c eta_Lc) t}
//   E[V(t)]      = theta* + (V0 - theta*) e^{-kappa t},
//                  theta* = delta + (lambda_V eta_VV + lambda_c eta_Vc)/kappa
struct FirstMoments {
    double s_over_s0 = 0.0;
    double l_over_l0 = 0.0;
    double v = 0.0;
};

inline FirstMoments analytic_moments(const ModelParams& p, double t) {
    if (t < 0.0) throw std::domain_error("analytic_moments: t must be >= 0");
    FirstMoments m;
    m.s_over_s0 = std::exp((p.mu_S + p.lambda_S * p.eta_S) * t);
    m.l_over_l0 = std::exp((p.mu_L + p.lambda_L * p.eta_LL + p.lambda_c * p.eta_Lc) * t);
    const double jump_rate = p.lambda_V * p.eta_VV + p.lambda_c * p.eta_Vc;
    if (p.kappa == 0.0) {
        m.v = p.V0 + (p.kappa * p.delta + jump_rate) * t; // linear-growth limit
    } else {
        const double theta = p.delta + jump_rate / p.kappa;
        m.v = theta + (p.V0 - theta) * std::exp(-p.kappa * t);
    }
    return m;
}

// Sample means of S/S0, L/L0 and V from direct nominal simulation, at a set
// of checkpoint times. Used by the moment-matching verification.
struct MomentSample {
    double t = 0.0;
    double s_mean = 0.0, s_se = 0.0;
    double l_mean = 0.0, l_se = 0.0;
    double v_mean = 0.0, v_se = 0.0;
};

inline std::vector<MomentSample> simulate_nominal_moments(const ModelParams& p,
                                                          const std::vector<double>& times,
                                                          std::int64_t n_paths,
                                                          int steps_per_year,
                                                          std::uint64_t seed) {
    if (times.empty()) return {};
    if (!std::is_sorted(times.begin(), times.end()))
        throw std::domain_error("simulate_nominal_moments: times must be ascending");
    const double t_max = *std::max_element(times.begin(), times.end());
    const std::int64_t n_steps =
        std::max<std::int64_t>(1, std::llround(t_max * steps_per_year));
    const double dt = t_max / static_cast<double>(n_steps);
    std::vector<std::int64_t> check_steps;
    for (double t : times)
        check_steps.push_back(std::llround(t / dt));

    const IncrementSampler sampler(p, dt);
    const std::size_t nc = times.size();
    // per-path checkpoint values, reduced in path order afterwards
    std::vector<double> sv(nc * n_paths), lv(nc * n_paths), vv(nc * n_paths);

    const auto run_range = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            RngStream rng = RngStream::for_path(seed, static_cast<std::uint64_t>(i));
            double S = 1.0, L = p.L0_real, V = p.V0;
            std::size_t ci = 0;
            for (std::int64_t k = 0; k < n_steps && ci < nc; ++k) {
                while (ci < nc && check_steps[ci] == k) {
                    sv[ci * n_paths + i] = S;
                    lv[ci * n_paths + i] = L / p.L0_real;
                    vv[ci * n_paths + i] = V;
                    ++ci;
                }
                const StepIncrements inc = sampler.draw(rng);
                const double vp = std::max(V, 0.0);
                const double sqv = std::sqrt(vp);
                const double S_new =
                    S * (1.0 + p.mu_S * dt + p.sigma_SS * inc.dw_s + p.eta_S * inc.dn_s);
                const double L_new =
                    L * (1.0 + p.mu_L * dt + p.sigma_LS * inc.dw_s + sqv * inc.dw_l +
                         p.eta_LL * inc.dn_l + p.eta_Lc * inc.dn_c);
                double V_new = V + p.kappa * (p.delta - vp) * dt + p.sigma_V * sqv * inc.dw_v +
                               p.eta_VV * inc.dn_v + p.eta_Vc * inc.dn_c;
                S = S_new;
                L = L_new;
                V = std::max(V_new, 0.0);
            }
            while (ci < nc) {
                sv[ci * n_paths + i] = S;
                lv[ci * n_paths + i] = L / p.L0_real;
                vv[ci * n_paths + i] = V;
                ++ci;
            }
        }
    };

    unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
    if (static_cast<std::int64_t>(n_threads) > n_paths)
        n_threads = static_cast<unsigned>(n_paths);
    std::vector<std::thread> pool;
    const std::int64_t chunk = (n_paths + n_threads - 1) / n_threads;
    for (unsigned w = 0; w < n_threads; ++w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min<std::int64_t>(n_paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();

    std::vector<MomentSample> out(nc);
    const auto mean_se = [n_paths](const double* x, double& mean, double& se) {
        double sum = 0.0;
        for (std::int64_t i = 0; i < n_paths; ++i) sum += x[i];
        mean = sum / static_cast<double>(n_paths);
        double ss = 0.0;
        for (std::int64_t i = 0; i < n_paths; ++i) {
            const double d = x[i] - mean;
            ss += d * d;
        }
        se = n_paths > 1 ? std::sqrt(ss / (static_cast<double>(n_paths) - 1.0) /
                                     static_cast<double>(n_paths))
                         : 0.0;
    };
    for (std::size_t c = 0; c < nc; ++c) {
        out[c].t = times[c];
        mean_se(&sv[c * n_paths], out[c].s_mean, out[c].s_se);
        mean_se(&lv[c * n_paths], out[c].l_mean, out[c].l_se);
        mean_se(&vv[c * n_paths], out[c].v_mean, out[c].v_se);
    }
    return out;
}

} // namespace pensionjd
