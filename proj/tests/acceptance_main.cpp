// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fail.
//
// usage: acceptance [cli_binary_path [baseline_config_path]]
// (the CLI path is needed only for the determinism criterion)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pensionjd/closedform.hpp"
#include "pensionjd/model.hpp"
#include "pensionjd/montecarlo.hpp"
#include "pensionjd/verify.hpp"

using namespace pensionjd;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_minus(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelParams baseline() {
    ModelParams p;
    p.m = 0.02; p.zeta = 0.10; p.r = 0.02;
    p.mu_S = 0.10; p.sigma_SS = 0.20; p.eta_S = 0.05; p.lambda_S = 1.0;
    p.mu_L = 0.03; p.sigma_LS = 0.10; p.eta_LL = 0.02; p.eta_Lc = 0.02;
    p.lambda_L = 0.5; p.lambda_c = 0.5;
    p.kappa = 2.0; p.delta = 0.04; p.sigma_V = 0.30;
    p.eta_VV = 0.01; p.eta_Vc = 0.01; p.lambda_V = 0.5;
    p.mu_Pi = 0.02; p.sigma_Pi = 0.02; p.eta_Pi = 0.02; p.lambda_Pi = 0.5;
    p.rho_Pir = 0.5; p.rho_LV = -0.3;
    p.xi = 0.10; p.lambda_mort = 0.01; p.T = 10.0;
    p.alpha1 = 1.0; p.beta1 = -1.0; p.X1_star = 1.5;
    p.alpha2 = 1.0; p.beta2 = -1.0; p.X2_star = 1.2;
    p.X0_real = 1.0; p.L0_real = 0.2; p.V0 = 0.04;
    return p;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1. closed-form scalars vs backward RK on a 101-point grid, < 1e-6, < 5 s
void criterion1(const Verifier& vf) {
    const auto t0 = std::chrono::steady_clock::now();
    const ResidualReport r = vf.check_ode(101, 1e-6);
    const double secs = now_minus(t0);
    std::ostringstream d;
    d << "max_abs=" << r.max_abs << ", " << secs << " s";
    report(1, r.pass && secs < 5.0, "oracle equivalence of phi1,phi2,phi4,phi5,phi6",
           d.str());
}

// 2. Riccati cases vs RK on [T-1, T] < 1e-8, ODE residual < 1e-8 at 50 points
void criterion2() {
    struct Case {
        const char* name;
        double kappa, sigma_V, rho_LV, delta;
    };
    const Case cases[] = {
        {"positive", 2.0, 0.3, -0.3, 0.04},
        {"zero", 0.244264068711928514640506617263, 0.3, -0.3, 0.2},
        {"negative", 0.3, 0.3, 0.0, 0.2},
    };
    bool ok = true;
    std::ostringstream d;
    for (const Case& cs : cases) {
        ModelParams p = baseline();
        p.kappa = cs.kappa;
        p.sigma_V = cs.sigma_V;
        p.rho_LV = cs.rho_LV;
        p.delta = cs.delta;
        const ValidatedParams vp(p);
        const ClosedForm cf(vp);
        const Verifier vf(vp, cf);
        const double tau = p.T;

        std::vector<double> ts(101);
        for (int i = 0; i <= 100; ++i) ts[i] = p.T - 1.0 + i / 100.0;
        const std::vector<double> oracle = vf.riccati_oracle_grid(tau, ts);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i)
            max_diff = std::max(max_diff,
                                std::abs(cf.riccati_phi32(ts[i], tau) - oracle[i]));

        const RiccatiSolution& ric = cf.riccati();
        double max_res = 0.0;
        const double h = 1e-6;
        for (int i = 0; i < 50; ++i) {
            const double t = p.T - 1.0 + (i + 0.5) / 50.0 * (1.0 - 2.0 * h);
            const double g = ric(t, tau);
            const double dg = (ric(t + h, tau) - ric(t - h, tau)) / (2.0 * h);
            max_res = std::max(max_res,
                               std::abs(dg + 1.0 + ric.b * g + 0.5 * ric.sigma_V2 * g * g));
        }
        ok = ok && max_diff < 1e-8 && max_res < 1e-8;
        d << cs.name << ": diff=" << max_diff << " res=" << max_res << "; ";
    }
    report(2, ok, "Riccati evaluator in all three discriminant cases", d.str());
}

// 3. HJB residual < 1e-6 relative over 100 states; quadratic identity 1e-10
void criterion3(const Verifier& vf) {
    const ResidualReport a = vf.check_hjb(100, 1e-6);
    const ResidualReport b = vf.check_hjb_quadratic(20, 1e-10);
    std::ostringstream d;
    d << "max_rel=" << a.max_rel << ", quadratic max_rel=" << b.max_rel;
    report(3, a.pass && b.pass, "HJB residual Psi(pi*)", d.str());
}

// 4. analytic FOC < 1e-12 relative everywhere, finite difference < 1e-6
void criterion4(const Verifier& vf) {
    const ResidualReport r = vf.check_foc(100, 1e-12, 20, 1e-6);
    std::ostringstream d;
    d << "max_rel=" << r.max_rel << "; " << r.detail;
    report(4, r.pass, "first-order condition dPsi/dpi(pi*)", d.str());
}

// 5. six ansatz brackets < 1e-6 relative on a 10x10 grid
void criterion5(const Verifier& vf) {
    const ResidualReport r = vf.check_ansatz(10, 10, 1e-6);
    std::ostringstream d;
    d << "max_rel=" << r.max_rel;
    report(5, r.pass, "ansatz monomial decomposition", d.str());
}

// 6. Monte Carlo vs analytic value: 1e5 paths, 252 steps/year, <= 3 se, < 60 s
void criterion6(const ValidatedParams& vp, const ClosedForm& cf) {
    const auto t0 = std::chrono::steady_clock::now();
    SimConfig cfg;
    cfg.n_paths = 100000;
    cfg.steps_per_year = 252;
    cfg.seed = 42;
    cfg.policy = {PolicySpec::Kind::optimal, 0.0};
    const Simulator sim(vp, cf);
    const ObjectiveEstimate est = sim.estimate_objective(cfg);
    const double phi0 = cf.value({0.0, vp->X0_real, vp->L0_real, vp->V0});
    const double secs = now_minus(t0);
    const double sigmas = std::abs(est.mean - phi0) / est.std_error;
    std::ostringstream d;
    d << "J=" << est.mean << "+-" << est.std_error << ", phi=" << phi0 << " ("
      << sigmas << " se), " << secs << " s";
    report(6, sigmas <= 3.0 && secs < 60.0, "Monte Carlo matches analytic value", d.str());
}

// 7. J(perturbed(d)) non-decreasing in |d| up to 2 se, common random numbers
void criterion7(const ValidatedParams& vp, const ClosedForm& cf) {
    const Simulator sim(vp, cf);
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.steps_per_year = 252;
    cfg.seed = 4242;
    bool ok = true;
    std::ostringstream d;
    for (double sign : {+1.0, -1.0}) {
        std::vector<PathResult> prev;
        for (double dm : {0.0, 0.05, 0.10, 0.25}) {
            cfg.policy = {PolicySpec::Kind::perturbed_optimal, sign * dm};
            auto cur = sim.simulate_paths(cfg);
            if (!prev.empty()) {
                double sum = 0.0;
                for (std::size_t i = 0; i < cur.size(); ++i)
                    sum += cur[i].total() - prev[i].total();
                const double mean = sum / double(cur.size());
                double ss = 0.0;
                for (std::size_t i = 0; i < cur.size(); ++i) {
                    const double x = cur[i].total() - prev[i].total() - mean;
                    ss += x * x;
                }
                const double se = std::sqrt(ss / (double(cur.size()) - 1.0) /
                                            double(cur.size()));
                if (mean < -2.0 * se) ok = false;
                d << "d=" << sign * dm << ": step=" << mean << "+-" << se << "; ";
            }
            prev = std::move(cur);
        }
    }
    report(7, ok, "objective non-decreasing in |policy offset|", d.str());
}

// 8. simulated E[S], E[L], E[V] match the analytic moments at t in {.5, 1, 5}
void criterion8(const ModelParams& p) {
    const auto samples = simulate_nominal_moments(p, {0.5, 1.0, 5.0}, 100000, 252, 7);
    bool ok = true;
    std::ostringstream d;
    for (const auto& s : samples) {
        const FirstMoments want = analytic_moments(p, s.t);
        const double zs = std::abs(s.s_mean - want.s_over_s0) / s.s_se;
        const double zl = std::abs(s.l_mean - want.l_over_l0) / s.l_se;
        const double zv = std::abs(s.v_mean - want.v) / s.v_se;
        ok = ok && zs <= 3.0 && zl <= 3.0 && zv <= 3.0;
        d << "t=" << s.t << ": z=(" << zs << "," << zl << "," << zv << "); ";
    }
    report(8, ok, "first moments of S, L, V", d.str());
}

// 9. degenerate limits: zero-noise exact, xi=0 salary-independent, beta2=0
void criterion9() {
    bool ok = true;
    std::ostringstream d;
    {
        ModelParams p = baseline();
        p.zeta = 0.0;
        p.sigma_Pi = 0.0;
        p.mu_S = p.m;
        p.lambda_S = p.lambda_L = p.lambda_c = p.lambda_V = p.lambda_Pi = 0.0;
        p.eta_S = p.eta_LL = p.eta_Lc = p.eta_VV = p.eta_Vc = p.eta_Pi = 0.0;
        p.sigma_V = 0.0;
        p.sigma_LS = 0.0;
        p.xi = 0.0;
        p.rho_Pir = p.rho_LV = 0.0;
        const ValidatedParams vp(p);
        const ClosedForm cf(vp);
        const Simulator sim(vp, cf);
        SimConfig cfg;
        cfg.n_paths = 64;
        cfg.steps_per_year = 252;
        cfg.seed = 1;
        const ObjectiveEstimate est = sim.estimate_objective(cfg);
        const double phi0 = cf.value({0.0, p.X0_real, p.L0_real, p.V0});
        const double rel = std::abs(est.mean - phi0) / std::abs(phi0);
        ok = ok && est.std_error == 0.0 && rel <= 1e-4;
        d << "zero-noise: se=" << est.std_error << " rel=" << rel << "; ";
    }
    {
        ModelParams p = baseline();
        p.xi = 0.0;
        const ValidatedParams vp(p);
        const ClosedForm cf(vp);
        bool sub = true;
        for (double t : {0.0, 3.0, 9.0}) {
            sub = sub && cf.phi5(t) == 0.0 && cf.phi3(t, 0.1) == 0.0;
        }
        sub = sub && cf.value({2.0, 1.1, 0.2, 0.03}) == cf.value({2.0, 1.1, 1.9, 0.4});
        ok = ok && sub;
        d << "xi=0: phi5=phi3=0 and L-independent value " << (sub ? "yes" : "NO") << "; ";
    }
    {
        ModelParams p = baseline();
        p.beta2 = 0.0;
        const ValidatedParams vp = ValidatedParams::unchecked(p);
        const ClosedForm cf(vp);
        const Simulator sim(vp, cf);
        SimConfig cfg;
        cfg.n_paths = 8;
        cfg.steps_per_year = 32;
        cfg.seed = 2;
        const auto paths = sim.simulate_paths(cfg);
        const double want = p.alpha2 * p.alpha2 * (1.0 - std::exp(-p.lambda_mort * p.T));
        bool sub = true;
        for (const auto& r : paths)
            sub = sub && std::abs(r.running_loss - want) < 1e-14;
        ok = ok && sub;
        d << "beta2=0 running loss exact " << (sub ? "yes" : "NO");
    }
    report(9, ok, "degenerate limits", d.str());
}

// 10. byte-identical repeated simulate runs; verify all exits 0
void criterion10(const std::string& cli, const std::string& config) {
    if (cli.empty()) {
        report(10, false, "CLI determinism", "no CLI path given");
        return;
    }
    const std::string base = "acceptance_tmp";
    bool ok = true;
    std::ostringstream d;
    for (int run = 1; run <= 2; ++run) {
        std::ostringstream cmd;
        cmd << "'" << cli << "' simulate --config '" << config << "'"
            << " --paths 1000 --steps-per-year 126 --seed 42 --policy optimal"
            << " --out " << base << "_run" << run << ".csv > " << base << "_run" << run
            << ".json 2>/dev/null";
        if (std::system(cmd.str().c_str()) != 0) {
            ok = false;
            d << "simulate run " << run << " failed; ";
        }
    }
    const std::string csv1 = read_file(base + "_run1.csv");
    const std::string csv2 = read_file(base + "_run2.csv");
    const std::string js1 = read_file(base + "_run1.json");
    const std::string js2 = read_file(base + "_run2.json");
    if (csv1.empty() || csv1 != csv2 || js1.empty() || js1 != js2) {
        ok = false;
        d << "outputs differ between identical runs; ";
    } else {
        d << "byte-identical simulate outputs; ";
    }
    std::ostringstream vcmd;
    vcmd << "'" << cli << "' verify all --config '" << config << "' --paths 20000 --seed 42"
         << " > " << base << "_verify.json 2> " << base << "_verify.log";
    const int rc = std::system(vcmd.str().c_str());
    if (rc != 0) {
        ok = false;
        d << "verify all exit != 0";
    } else {
        d << "verify all exit 0";
    }
    report(10, ok, "determinism and end-to-end verify", d.str());
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const std::string config =
        argc > 2 ? argv[2] : std::string(PENSIONJD_CONFIG_DIR) + "/baseline.json";

    const ModelParams p = baseline();
    const ValidatedParams vp(p);
    const ClosedForm cf(vp);
    const Verifier vf(vp, cf);

    criterion1(vf);
    criterion2();
    criterion3(vf);
    criterion4(vf);
    criterion5(vf);
    criterion6(vp, cf);
    criterion7(vp, cf);
    criterion8(p);
    criterion9();
    criterion10(cli, config);

    if (g_failures == 0) {
        std::printf("all 10 acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
}
