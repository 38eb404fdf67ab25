#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kylesim/functional.hpp"
#include "kylesim/market.hpp"
#include "kylesim/rules.hpp"
#include "kylesim/scenario_io.hpp"
#include "kylesim/verify.hpp"

namespace fs = std::filesystem;
using namespace kylesim;

namespace {

enum Exit { ok = 0, fail = 1, config = 2, aborted = 3 };

struct Source {
    std::string scenario, manifest;
};

Scenario load(const Source& src) {
    if (!src.manifest.empty()) return load_manifest(src.manifest);
    if (src.scenario.empty()) throw ConfigError("one of --scenario or --manifest is required");
    if (!fs::exists(src.scenario)) throw ConfigError("scenario file not found: " + src.scenario);
    return load_scenario(src.scenario);
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

fs::path out_dir(const std::string& flag, const Scenario& sc) {
    fs::path d = flag.empty() ? fs::path(sc.output.dir) : fs::path(flag);
    fs::create_directories(d);
    return d;
}

// runs `body`, mapping errors to exit codes
template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config;
    } catch (const SimulationAborted& e) {
        std::cerr << "simulation aborted: " << e.what() << "\n";
        return aborted;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return aborted;
    }
}

RuleKind parse_rule(const std::string& s) {
    for (RuleKind k : {RuleKind::bachelier, RuleKind::black_scholes, RuleKind::det_lambda, RuleKind::kimura})
        if (s == to_string(k)) return k;
    throw ConfigError("--rule: unknown rule '" + s + "'");
}

// "NTxNX", optionally "NTxNX:x0:x1"
RuleGrid parse_grid(const std::string& spec, const RuleSpec& rule) {
    std::size_t nt = 0, nx = 0;
    double x0 = 0.0, x1 = 0.0;
    char tail = 0;
    const int got = std::sscanf(spec.c_str(), "%zux%zu:%lf:%lf%c", &nt, &nx, &x0, &x1, &tail);
    if ((got != 2 && got != 4) || nt < 2 || nx < 2)
        throw ConfigError("--grid: expected NTxNX or NTxNX:x0:x1, got '" + spec + "'");
    if (got == 2) return default_rule_grid(rule, nt, nx);
    if (!(x1 > x0)) throw ConfigError("--grid: x range must be increasing");
    return make_rule_grid(0.0, rule.horizon, nt, x0, x1, nx);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Insider-trading equilibrium simulator and certifier"};
    app.require_subcommand(1);

    Source sim_src;
    std::string sim_out;
    std::optional<std::uint64_t> seed, paths, steps;
    auto* sim = app.add_subcommand("simulate", "simulate a scenario and write result.csv, summary.json, manifest.json");
    sim->add_option("--scenario", sim_src.scenario, "scenario file");
    sim->add_option("--manifest", sim_src.manifest, "manifest.json of an earlier run");
    sim->add_option("--out", sim_out, "output directory");
    sim->add_option("--seed", seed, "override mc.seed");
    sim->add_option("--paths", paths, "override mc.paths");
    sim->add_option("--steps", steps, "override mc.steps");

    Source cert_src;
    std::string cert_out;
    auto* cert = app.add_subcommand("certify", "run the equilibrium certification across dt levels");
    cert->add_option("--scenario", cert_src.scenario, "scenario file");
    cert->add_option("--manifest", cert_src.manifest, "manifest.json of an earlier run");
    cert->add_option("--out", cert_out, "output directory");

    std::string rule_name, grid_spec = "21x41";
    double gamma = 0.0, p0 = std::nan(""), lambda = 1.0, C = 1.0, sigma = 1.0, T = 1.0;
    auto* check = app.add_subcommand("check-rule", "residuals of a pricing rule's equilibrium conditions");
    check->add_option("--rule", rule_name, "bachelier | black_scholes | det_lambda | kimura")->required();
    check->add_option("--gamma", gamma, "risk aversion (<= 0)");
    check->add_option("--grid", grid_spec, "NTxNX or NTxNX:x0:x1");
    check->add_option("--P0", p0, "initial price");
    check->add_option("--lambda", lambda, "price impact");
    check->add_option("--C", C, "Kimura volatility");
    check->add_option("--sigma", sigma, "noise volatility");
    check->add_option("--T", T, "horizon");

    auto* selftest = app.add_subcommand("calculus-selftest", "reference functional derivative identities");

    Source rep_src;
    std::size_t rep_index = 0;
    auto* rep = app.add_subcommand("replay", "print one path's trajectory as CSV");
    rep->add_option("--scenario", rep_src.scenario, "scenario file");
    rep->add_option("--manifest", rep_src.manifest, "manifest.json of an earlier run");
    rep->add_option("--index", rep_index, "path index")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config;
    }

    if (*sim)
        return guarded([&] {
            Scenario sc = load(sim_src);
            if (seed) sc.mc.seed = *seed;
            if (paths) sc.mc.paths = *paths;
            if (steps) sc.mc.steps = *steps;
            try {
                sc.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            const fs::path dir = out_dir(sim_out, sc);
            SimOptions so;
            so.collect_checkpoints = false;
            so.fail_rate_max = sc.verify.fail_rate_max;
            const SimulationResult r = simulate(sc, so);
            write_file(dir / "result.csv", result_csv(r));
            write_file(dir / "summary.json", summary_json(r));
            write_file(dir / "manifest.json", manifest_json(sc));
            if (sc.output.emit_paths) write_file(dir / "paths.csv", paths_csv(sc));
            std::cout << "wrote " << r.records.size() << " paths to " << dir.string() << "\n";
            return static_cast<int>(ok);
        });

    if (*cert)
        return guarded([&] {
            const Scenario sc = load(cert_src);
            const fs::path dir = out_dir(cert_out, sc);
            const EquilibriumReport report = certify(sc);
            write_file(dir / "report.json", report_json(report));
            const std::string text = report_text(report);
            write_file(dir / "report.txt", text);
            write_file(dir / "manifest.json", manifest_json(sc));
            std::cout << text;
            return static_cast<int>(report.verdict ? ok : fail);
        });

    if (*check)
        return guarded([&] {
            if (gamma > 0.0) throw ConfigError("--gamma: must be <= 0");
            const RuleKind kind = parse_rule(rule_name);
            RuleSpec rule;
            switch (kind) {
                case RuleKind::bachelier: rule = bachelier_rule(std::isnan(p0) ? 0.0 : p0, lambda, sigma, T); break;
                case RuleKind::black_scholes: rule = black_scholes_rule(std::isnan(p0) ? 1.0 : p0, lambda, sigma, T); break;
                case RuleKind::det_lambda: rule = det_lambda_rule(std::isnan(p0) ? 0.0 : p0, lambda, gamma, sigma, T); break;
                default: rule = kimura_rule(std::isnan(p0) ? 0.5 : p0, C, gamma, sigma, T); break;
            }
            rule.gamma = gamma;
            const RuleGrid grid = parse_grid(grid_spec, rule);
            const double h = check_H_equation(rule, grid);
            const double l = check_lambda_equation(rule, grid);
            const TimeGrid fine(T, 4096);
            const PathBundle bundle = brownian_bundle(fine, 10, sigma, 1);
            const EquilibriumResiduals er = check_equilibrium_conditions(rule, bundle, {}, 8);
            std::printf("H_equation            %.6e\n", h);
            std::printf("lambda_equation       %.6e\n", l);
            std::printf("horizontal_condition  %.6e\n", er.h_residual);
            std::printf("commutator_condition  %.6e\n", er.commutator_residual);
            std::printf("kernel_factorization  %.6e (relative)\n", er.kv_relative);
            const bool pass = h < 1e-3 && l < 1e-3 && er.h_residual < 1e-3 && er.commutator_residual < 1e-3;
            std::printf("%s\n", pass ? "pass" : "fail");
            return static_cast<int>(pass ? ok : fail);
        });

    if (*selftest)
        return guarded([&] {
            bool pass = true;
            for (const IdentityCheck& c : calculus_identities()) {
                std::printf("%-4s %-30s max error %.3e tol %.1e (%zu evaluations)\n", c.pass ? "ok" : "FAIL",
                            c.name.c_str(), c.max_error, c.tolerance, c.evaluations);
                pass = pass && c.pass;
            }
            return static_cast<int>(pass ? ok : fail);
        });

    if (*rep)
        return guarded([&] {
            const Scenario sc = load(rep_src);
            if (rep_index >= sc.mc.paths) throw ConfigError("--index: out of range");
            std::cout << "t,Z,Y,P,theta,W,capped,boundary\n";
            for (const TrajectoryRow& t : replay(sc, rep_index))
                std::cout << format_double(t.t) << "," << format_double(t.Z) << "," << format_double(t.Y) << ","
                          << format_double(t.P) << "," << format_double(t.theta) << "," << format_double(t.W) << ","
                          << t.capped << "," << t.boundary << "\n";
            return static_cast<int>(ok);
        });
    return config;
}
