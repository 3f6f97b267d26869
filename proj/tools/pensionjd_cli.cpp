// Batch command-line front end: load a JSON config, run validation, the
// closed-form evaluators, the simulator or the verification suite, and emit
// CSV/JSON artifacts.
//
// Exit codes: 0 success, 1 usage error, 2 invalid config,
//             3 verification failure, 4 runtime/numerical failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pensionjd/closedform.hpp"
#include "pensionjd/model.hpp"
#include "pensionjd/montecarlo.hpp"
#include "pensionjd/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitVerifyFail = 3;
constexpr int kExitNumerical = 4;

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct Manifest {
    std::string subcommand;
    std::string config_path;
    nlohmann::json params;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& path) const {
        if (path.empty()) return;
        nlohmann::json j{{"subcommand", subcommand},
                         {"config", config_path},
                         {"params", params},
                         {"outputs", outputs},
                         {"duration_seconds",
                          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                              .count()}};
        if (seed) j["seed"] = *seed;
        std::ofstream out(path);
        out << j.dump(2) << "\n";
    }
};

pensionjd::PolicySpec parse_policy(const std::string& s) {
    using pensionjd::PolicySpec;
    if (s == "optimal") return {PolicySpec::Kind::optimal, 0.0};
    if (s.rfind("constant:", 0) == 0)
        return {PolicySpec::Kind::constant_weight, std::stod(s.substr(9))};
    if (s.rfind("perturbed:", 0) == 0)
        return {PolicySpec::Kind::perturbed_optimal, std::stod(s.substr(10))};
    throw CLI::ValidationError("--policy", "expected optimal|constant:<w>|perturbed:<d>");
}

// grid syntax a:b:n -> n equally spaced points including both ends
std::vector<double> parse_grid(const std::string& s) {
    const auto p1 = s.find(':');
    const auto p2 = s.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
        throw CLI::ValidationError("--grid-x", "expected a:b:n");
    const double a = std::stod(s.substr(0, p1));
    const double b = std::stod(s.substr(p1 + 1, p2 - p1 - 1));
    const long n = std::stol(s.substr(p2 + 1));
    if (n < 1) throw CLI::ValidationError("--grid-x", "n must be >= 1");
    std::vector<double> g(n);
    for (long i = 0; i < n; ++i)
        g[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

} // namespace

int main(int argc, char** argv) {
    using namespace pensionjd;

    CLI::App app{"closed-form optimal DC-pension investment under jump diffusions, "
                 "with Monte Carlo and verification tools"};
    app.require_subcommand(1);

    std::string config_path, manifest_path;

    auto* c_validate = app.add_subcommand("validate", "check config invariants");
    auto* c_coeffs = app.add_subcommand("coeffs", "print varpi and a vectors as JSON");
    auto* c_value = app.add_subcommand("value", "evaluate the value function at a state");
    auto* c_policy = app.add_subcommand("policy", "CSV of (x_bar, pi*, A*) over a wealth grid");
    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo estimate of the objective");
    auto* c_verify = app.add_subcommand("verify", "residual checks against the oracles");

    for (auto* sc : {c_validate, c_coeffs, c_value, c_policy, c_sim, c_verify}) {
        sc->add_option("--config", config_path, "JSON parameter file")->required();
        sc->add_option("--manifest", manifest_path, "write a run manifest JSON here");
    }

    double t = 0.0, x = 0.0, l = 0.0, v = 0.0;
    c_value->add_option("--t", t)->required();
    c_value->add_option("--x", x)->required();
    c_value->add_option("--l", l)->required();
    c_value->add_option("--v", v)->required();

    std::string grid_spec, out_path;
    c_policy->add_option("--t", t)->required();
    c_policy->add_option("--grid-x", grid_spec, "wealth grid a:b:n")->required();
    c_policy->add_option("--l", l)->required();
    c_policy->add_option("--v", v)->required();
    c_policy->add_option("--out", out_path, "output CSV")->required();

    std::int64_t n_paths = 10000;
    int steps_per_year = 252;
    std::uint64_t seed = 0;
    std::string policy_spec = "optimal", mode_spec = "written";
    c_sim->add_option("--paths", n_paths)->check(CLI::PositiveNumber);
    c_sim->add_option("--steps-per-year", steps_per_year)->check(CLI::PositiveNumber);
    c_sim->add_option("--seed", seed);
    c_sim->add_option("--policy", policy_spec, "optimal|constant:<w>|perturbed:<d>");
    c_sim->add_option("--mode", mode_spec)->check(CLI::IsMember({"written", "exact"}));
    c_sim->add_option("--out", out_path, "per-path CSV");

    std::string which = "all";
    double tol_override = 0.0;
    std::int64_t verify_paths = 20000;
    std::uint64_t verify_seed = 42;
    c_verify->add_option("check", which)
        ->check(CLI::IsMember({"all", "ode", "hjb", "foc", "ansatz", "mc"}));
    c_verify->add_option("--tol", tol_override, "override the default tolerance");
    c_verify->add_option("--paths", verify_paths, "paths for the mc check")
        ->check(CLI::PositiveNumber);
    c_verify->add_option("--seed", verify_seed, "seed for the mc check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    Manifest manifest;
    manifest.config_path = config_path;

    try {
        const ModelParams params = load_params_file(config_path);
        manifest.params = params_to_json(params);

        if (c_validate->parsed()) {
            manifest.subcommand = "validate";
            const auto violations = check_params(params);
            if (violations.empty()) {
                std::cout << "config valid\n";
                manifest.write(manifest_path);
                return kExitOk;
            }
            std::cout << violations.size() << " violation(s):\n";
            for (const auto& s : violations) std::cout << "  - " << s << "\n";
            return kExitBadConfig;
        }

        const ValidatedParams vp(params);

        if (c_coeffs->parsed()) {
            manifest.subcommand = "coeffs";
            const DerivedCoeffs c = derive_coeffs(vp);
            nlohmann::json j{{"varpi", {{"varpi1", c.varpi1}, {"varpi2", c.varpi2},
                                        {"varpi3", c.varpi3}, {"varpi4", c.varpi4}}},
                             {"a", {{"a1", c.a1}, {"a2", c.a2}, {"a3", c.a3},
                                    {"a4", c.a4}, {"a5", c.a5}}}};
            std::cout << j.dump(2) << "\n";
            manifest.write(manifest_path);
            return kExitOk;
        }

        const ClosedForm cf(vp);

        if (c_value->parsed()) {
            manifest.subcommand = "value";
            const State s{t, x, l, v};
            const PhiScalars ps = cf.phi_scalars(t);
            nlohmann::json j{{"t", t},          {"x_bar", x},
                             {"l_bar", l},      {"v", v},
                             {"value", cf.value(s)},
                             {"phi1", ps.phi1}, {"phi2", ps.phi2},
                             {"phi3", cf.phi3(t, v)},
                             {"phi4", ps.phi4}, {"phi5", ps.phi5},
                             {"phi6", ps.phi6}};
            std::cout << j.dump(2) << "\n";
            manifest.write(manifest_path);
            return kExitOk;
        }

        if (c_policy->parsed()) {
            manifest.subcommand = "policy";
            std::ofstream out(out_path);
            if (!out) throw std::runtime_error("cannot open output file: " + out_path);
            out << "x_bar,pi_star,a_star\n";
            for (double xg : parse_grid(grid_spec)) {
                const auto d = cf.optimal_policy({t, xg, l, v});
                out << fmt17(xg) << "," << fmt17(d.weight) << "," << fmt17(d.amount) << "\n";
            }
            manifest.outputs.push_back(out_path);
            manifest.write(manifest_path);
            return kExitOk;
        }

        if (c_sim->parsed()) {
            manifest.subcommand = "simulate";
            manifest.seed = seed;
            SimConfig cfg;
            cfg.n_paths = n_paths;
            cfg.steps_per_year = steps_per_year;
            cfg.seed = seed;
            cfg.policy = parse_policy(policy_spec);
            cfg.mode = mode_spec == "exact" ? SimMode::exact_quotient
                                            : SimMode::model_as_written;
            const Simulator sim(vp, cf);
            const std::vector<PathResult> paths = sim.simulate_paths(cfg);
            const ObjectiveEstimate est = Simulator::reduce_objective(paths);
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                if (!out) throw std::runtime_error("cannot open output file: " + out_path);
                out << "path,terminal_x_bar,running_loss,terminal_loss\n";
                for (std::size_t i = 0; i < paths.size(); ++i)
                    out << i << "," << fmt17(paths[i].terminal_x_bar) << ","
                        << fmt17(paths[i].running_loss) << ","
                        << fmt17(paths[i].terminal_loss) << "\n";
                manifest.outputs.push_back(out_path);
            }
            nlohmann::json j{{"mean", est.mean},
                             {"std_error", est.std_error},
                             {"n_paths", est.n_paths},
                             {"aborted", est.aborted}};
            std::cout << j.dump(2) << "\n";
            manifest.write(manifest_path);
            return kExitOk;
        }

        if (c_verify->parsed()) {
            manifest.subcommand = "verify";
            manifest.seed = verify_seed;
            const Verifier vf(vp, cf);
            SimConfig mc_cfg;
            mc_cfg.n_paths = verify_paths;
            mc_cfg.seed = verify_seed;
            std::vector<ResidualReport> reports;
            const bool has_tol = c_verify->count("--tol") > 0;
            if (which == "all") {
                reports = vf.run_all(mc_cfg);
            } else if (which == "ode") {
                reports.push_back(vf.check_ode(101, has_tol ? tol_override : 1e-6));
            } else if (which == "hjb") {
                reports.push_back(vf.check_hjb(100, has_tol ? tol_override : 1e-6));
                reports.push_back(vf.check_hjb_quadratic(20, has_tol ? tol_override : 1e-10));
            } else if (which == "foc") {
                reports.push_back(vf.check_foc(100, has_tol ? tol_override : 1e-12));
            } else if (which == "ansatz") {
                reports.push_back(vf.check_ansatz(10, 10, has_tol ? tol_override : 1e-6));
            } else if (which == "mc") {
                reports = vf.check_mc(mc_cfg);
            }
            bool all_pass = true;
            for (const auto& r : reports) {
                all_pass = all_pass && r.pass;
                std::cerr << (r.pass ? "[PASS] " : "[FAIL] ") << r.name
                          << "  max_abs=" << fmt17(r.max_abs)
                          << "  max_rel=" << fmt17(r.max_rel) << "  tol=" << fmt17(r.tolerance)
                          << "\n";
            }
            std::cout << to_json(reports).dump(2) << "\n";
            manifest.write(manifest_path);
            return all_pass ? kExitOk : kExitVerifyFail;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const ValidationError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const QuadratureError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
