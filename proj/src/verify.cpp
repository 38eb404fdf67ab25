#include "kylesim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "kylesim/stats.hpp"

namespace kylesim {

const char* const kReportCaveat =
    "A true verdict is statistical evidence at desk scale, not a proof of equilibrium.";

void Block::settle(bool empty_ok) {
    pass = checks.empty() ? empty_ok : true;
    for (const Check& c : checks) pass = pass && c.pass;
}

const Check* Block::find(const std::string& check) const {
    for (const Check& c : checks)
        if (c.name == check) return &c;
    return nullptr;
}

const Block* EquilibriumReport::block(const std::string& name) const {
    for (const Block& b : blocks)
        if (b.name == name) return &b;
    return nullptr;
}

namespace {

bool usable(const PathRecord& p) { return !p.failed && p.boundary_events == 0; }

// |x| < k se, with se == 0 demanding x == 0
bool within(double x, double se, double k) { return se > 0.0 ? std::abs(x) < k * se : x == 0.0; }

Check below(std::string name, double stat, double threshold) {
    return Check{std::move(name), stat, 0.0, threshold, stat < threshold};
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

Block test_pde(const Scenario& sc) {
    Block b{"pde", false, {}, {}};
    const VerifyConfig& cfg = sc.verify;
    const RuleSpec rule = sc.rule();
    const RuleGrid g = default_rule_grid(rule, 21, 41);
    b.checks.push_back(below("H_equation_analytic", check_H_equation(rule, g), cfg.pde_tol));
    b.checks.push_back(below("lambda_equation_analytic", check_lambda_equation(rule, g), cfg.pde_tol));

    if (!rule.sigma.is_constant()) {
        b.notes.push_back("numeric path-derivative checks need a constant sigma_Z; skipped");
    } else {
        const TimeGrid fine(rule.horizon, cfg.pde_steps);
        const PathBundle paths = brownian_bundle(fine, cfg.pde_paths, rule.sigma(0.0), sc.mc.seed);
        const EquilibriumResiduals r = check_equilibrium_conditions(rule, paths, {}, cfg.pde_stride);
        b.checks.push_back(below("horizontal_condition", r.h_residual, cfg.pde_tol));
        b.checks.push_back(below("commutator_condition", r.commutator_residual, cfg.pde_tol));
        b.checks.push_back(below("kernel_factorization", r.kv_relative, cfg.kv_tol));
        b.checks.push_back(Check{"min_gradient", r.min_gradient, 0.0, 0.0, r.min_gradient > 0.0});
        if (r.skipped_boundary > 0)
            b.notes.push_back(std::to_string(r.skipped_boundary) + " boundary nodes skipped");
        const TwoHistoryResult th = two_history_check(rule, fine, cfg.pde_steps / 2, sc.mc.seed);
        b.checks.push_back(below("two_history_gradient", th.relative_gap, cfg.two_history_tol));
    }
    b.settle();
    return b;
}

Block test_brownian(const SimulationResult& r, const Scenario& sc) {
    Block b{"martingale", false, {}, {}};
    const VerifyConfig& cfg = sc.verify;
    if (r.increments.empty()) throw std::invalid_argument("martingale block needs collected increments");
    const std::size_t len = r.increments_per_path;
    std::vector<double> x;
    x.reserve(r.increments.size());
    for (std::size_t i = 0; i < r.records.size(); ++i)
        if (usable(r.records[i]))
            x.insert(x.end(), r.increments.begin() + static_cast<std::ptrdiff_t>(i * len),
                     r.increments.begin() + static_cast<std::ptrdiff_t>((i + 1) * len));
    if (x.size() / len < 1000) b.notes.push_back("fewer than 1000 usable paths");

    // the pooled scale is tested by the QV ratio; KS sees shape and location
    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double scale = std::sqrt(ss / static_cast<double>(x.size()));
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] / scale;
    const KsResult ks = ks_normal(z);
    b.checks.push_back(Check{"ks_normal", ks.D, ks.p_value, cfg.ks_alpha, ks.p_value > cfg.ks_alpha});
    const LjungBoxResult lb = ljung_box_panel(x, len, std::min(cfg.lb_lags, len - 1));
    b.checks.push_back(Check{"ljung_box", lb.Q, lb.p_value, cfg.lb_alpha, lb.p_value > cfg.lb_alpha});

    const double target = sc.sigma().integrated(0.0, sc.model.T);
    std::vector<double> q;
    for (const PathRecord& p : r.records)
        if (usable(p)) q.push_back(p.qv / target);
    const MeanSe m = mean_se(q);
    b.checks.push_back(Check{"qv_ratio", m.mean, m.se, cfg.qv_tol, std::abs(m.mean - 1.0) < cfg.qv_tol});
    b.notes.push_back("increment scale " + fmt("%.6g", scale) + " (unit under the null)");
    b.settle();
    return b;
}

Block test_terminal(const std::vector<TerminalLevel>& levels, double scale, const VerifyConfig& cfg) {
    Block b{"terminal", false, {}, {}};
    if (levels.size() < 3) throw std::invalid_argument("terminal block needs at least 3 dt levels");
    std::vector<double> dts, gaps;
    bool all_zero = true;
    for (const TerminalLevel& l : levels) {
        dts.push_back(l.dt);
        gaps.push_back(l.mean_gap);
        all_zero = all_zero && l.mean_gap == 0.0;
    }
    if (all_zero) {
        b.notes.push_back("terminal gap vanishes at every level");
        b.checks.push_back(Check{"gap_slope", 0.5, 0.0, cfg.slope_lo, true});
    } else {
        const double s = log_log_slope(dts, gaps);
        b.checks.push_back(Check{"gap_slope", s, 0.0, cfg.slope_lo, s >= cfg.slope_lo && s <= cfg.slope_hi});
        b.notes.push_back("gap_slope band [" + fmt("%g", cfg.slope_lo) + ", " + fmt("%g", cfg.slope_hi) + "]");
    }
    const auto finest = std::min_element(levels.begin(), levels.end(),
                                         [](const TerminalLevel& a, const TerminalLevel& c) { return a.dt < c.dt; });
    const double thr = cfg.gap_frac * scale;
    b.checks.push_back(Check{"finest_gap", finest->mean_gap, finest->se_gap, thr, finest->mean_gap < thr});
    b.settle();
    return b;
}

Block test_competitive(const SimulationResult& r, const VerifyConfig& cfg) {
    Block b{"competitive", false, {}, {}};
    const std::size_t nc = r.checkpoint_nodes.size();
    for (std::size_t c = 0; c < nc; ++c) {
        std::vector<double> p, v;
        for (std::size_t i = 0; i < r.records.size(); ++i)
            if (usable(r.records[i])) {
                p.push_back(r.checkpoint_prices[i * nc + c]);
                v.push_back(r.records[i].V);
            }
        const double t = r.grid.time(r.checkpoint_nodes[c]);
        const std::string tag = "t=" + fmt("%.6g", t);
        try {
            const OlsResult o = ols_hc1(p, v);
            b.checks.push_back(Check{"slope " + tag, o.slope, o.se_slope, cfg.se_mult,
                                     within(o.slope - 1.0, o.se_slope, cfg.se_mult)});
            b.checks.push_back(Check{"intercept " + tag, o.intercept, o.se_intercept, cfg.se_mult,
                                     within(o.intercept, o.se_intercept, cfg.se_mult)});
        } catch (const std::invalid_argument& e) {
            b.notes.push_back(tag + " skipped: " + e.what());
        }
    }
    if (nc == 0) b.notes.push_back("no checkpoints collected");
    b.settle(true);
    return b;
}

Block test_market_maker(const SimulationResult& r, const VerifyConfig& cfg) {
    Block b{"market_maker", false, {}, {}};
    const Summary& s = r.summary;
    b.checks.push_back(Check{"mean_WM", s.mean_WM, s.se_WM, cfg.se_mult, within(s.mean_WM, s.se_WM, cfg.se_mult)});
    b.notes.push_back("position-accounting form " + fmt("%.6g", s.mean_WM_remark) + " +- " +
                      fmt("%.3g", s.se_WM_remark) + " (diagnostic)");
    b.settle();
    return b;
}

Block test_value(const SimulationResult& r, const Scenario& sc) {
    Block b{"value", false, {}, {}};
    const VerifyConfig& cfg = sc.verify;
    const RuleSpec rule = sc.rule();
    const double gamma = rule.gamma;
    std::vector<double> W, O, V, d;
    for (const PathRecord& p : r.records) {
        if (!usable(p)) continue;
        const double o = optimal_value_oracle(rule, p.V);
        W.push_back(p.W_T);
        V.push_back(p.V);
        O.push_back(o);
        d.push_back(gamma == 0.0 ? p.W_T - o : std::exp(gamma * p.W_T) - std::exp(gamma * o));
    }
    const MeanSe md = mean_se(d);
    if (gamma == 0.0) {
        const MeanSe mw = mean_se(W), mo = mean_se(O);
        b.checks.push_back(Check{"paired_wealth_gap", md.mean, md.se, cfg.se_mult, within(md.mean, md.se, cfg.se_mult)});
        b.checks.push_back(Check{"mean_wealth", mw.mean, mw.se, mo.mean, within(mw.mean - mo.mean, mw.se, cfg.se_mult)});
    } else {
        b.checks.push_back(Check{"paired_exp_utility_gap", md.mean, md.se, cfg.se_mult,
                                 within(md.mean, md.se, cfg.se_mult)});
        const double ce = certainty_equivalent(W, gamma), ce_o = certainty_equivalent(O, gamma);
        double eo = 0.0;
        for (double o : O) eo += std::exp(gamma * o);
        eo /= static_cast<double>(O.size());
        const double se_ce = md.se / (std::abs(gamma) * eo);
        b.checks.push_back(Check{"certainty_equivalent", ce, se_ce, ce_o, within(ce - ce_o, se_ce, cfg.se_mult)});
        // the drift term without the 1/2, kept as a diagnostic
        const ValueFunctionSpec vf{[&rule](double t, double z) { return rule.market_depth(t, z); }, 1e-10};
        std::vector<double> O_full(O.size());
        for (std::size_t i = 0; i < O.size(); ++i)
            O_full[i] = 2.0 * O[i] - value_function_I(0.0, rule.p0, V[i], vf);
        b.notes.push_back("oracle without the 1/2 on the drift term: certainty equivalent " +
                          fmt("%.6g", certainty_equivalent(O_full, gamma)));
    }
    b.settle();
    return b;
}

Block test_optimality(const std::vector<PerturbationEstimate>& est, const VerifyConfig& cfg) {
    Block b{"optimality", false, {}, {}};
    for (const PerturbationEstimate& e : est) {
        b.checks.push_back(Check{"dJ " + e.name, e.dJ, e.se, cfg.se_mult, within(e.dJ, e.se, cfg.se_mult)});
        b.checks.push_back(Check{"curvature " + e.name, e.curvature, e.curvature_se, 0.0, e.curvature <= 0.0});
    }
    b.settle();
    return b;
}

Block test_admissibility(const SimulationResult& r, const Scenario& sc) {
    Block b{"admissibility", false, {}, {}};
    const VerifyConfig& cfg = sc.verify;
    const Summary& s = r.summary;
    const double N = static_cast<double>(s.paths);
    b.checks.push_back(below("cap_rate", s.cap_rate, cfg.cap_rate_max));
    b.checks.push_back(below("failed_rate", static_cast<double>(s.failed) / N, cfg.fail_rate_max));
    b.checks.push_back(Check{"utility_overflows", static_cast<double>(s.utility_overflows), 0.0, 0.0,
                             s.utility_overflows == 0});
    const double n_steps = static_cast<double>(r.grid.n_steps());
    const double v_step = sc.sigma().integrated(0.0, sc.model.T) / n_steps;
    const double live = N - static_cast<double>(s.failed);
    const double mean_se = std::sqrt(v_step / (n_steps * live));
    b.checks.push_back(Check{"noise_mean", s.dz_mean, mean_se, cfg.se_mult, within(s.dz_mean, mean_se, cfg.se_mult)});
    b.checks.push_back(below("noise_variance_rel", std::abs(s.dz_var / v_step - 1.0), 0.01));
    const double corr_thr = 3.0 / std::sqrt(live);
    b.checks.push_back(below("corr_V_Z", std::abs(s.corr_V_Z), corr_thr));
    if (s.boundary_paths > 0)
        b.notes.push_back(std::to_string(s.boundary_paths) + " boundary paths excluded from the statistics");
    b.settle();
    return b;
}

double terminal_gap_scale(const Scenario& sc) {
    const double sd = sc.fundamental.sd();
    if (sd > 0.0) return sd;
    const RuleSpec rule = sc.rule();
    return rule.market_depth(0.0, rule.p0) * rule.sigma(0.0) * std::sqrt(sc.model.T);
}

EquilibriumReport certify(const Scenario& sc, const CertifyOptions& opt) {
    sc.validate();
    EquilibriumReport rep;
    rep.thresholds = sc.verify;
    std::vector<double> dts = sc.mc.dt_levels;
    std::sort(dts.begin(), dts.end(), std::greater<>());

    auto guarded = [&rep](const std::string& name, auto&& fn) {
        try {
            rep.blocks.push_back(fn());
        } catch (const SimulationAborted&) {
            throw;
        } catch (const std::exception& e) {
            Block b{name, false, {}, {}};
            b.notes.push_back(std::string("error: ") + e.what());
            b.pass = false;
            rep.blocks.push_back(b);
        }
    };

    guarded("pde", [&] { return test_pde(sc); });

    std::vector<TerminalLevel> term;
    SimulationResult finest;
    Scenario fine_sc = sc;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        Scenario s = sc;
        s.mc.steps = steps_for_dt(sc.model.T, dts[i]);
        const bool last = i + 1 == dts.size();
        SimOptions so;
        so.threads = opt.threads;
        so.fail_rate_max = sc.verify.fail_rate_max;
        so.thin = sc.verify.thin;
        so.collect_increments = last;
        so.collect_checkpoints = last;
        SimulationResult r = simulate(s, so);
        rep.levels.push_back(LevelRun{dts[i], s.mc.steps, r.summary});
        term.push_back(TerminalLevel{dts[i], r.summary.mean_gap, r.summary.se_gap});
        if (last) {
            finest = std::move(r);
            fine_sc = s;
        }
    }
    if (dts.empty()) throw std::invalid_argument("certify needs dt levels");

    guarded("martingale", [&] { return test_brownian(finest, fine_sc); });
    guarded("terminal", [&] { return test_terminal(term, terminal_gap_scale(sc), sc.verify); });
    guarded("competitive", [&] { return test_competitive(finest, sc.verify); });
    guarded("market_maker", [&] { return test_market_maker(finest, sc.verify); });
    if (opt.with_value) guarded("value", [&] { return test_value(finest, fine_sc); });
    if (opt.with_optimality)
        guarded("optimality", [&] {
            rep.perturbation = perturb_and_evaluate(fine_sc, canonical_directions(), sc.verify.epsilon, opt.threads);
            return test_optimality(rep.perturbation, sc.verify);
        });
    guarded("admissibility", [&] { return test_admissibility(finest, fine_sc); });

    rep.verdict = !rep.blocks.empty();
    for (const Block& b : rep.blocks) rep.verdict = rep.verdict && b.pass;
    return rep;
}

namespace {

nlohmann::ordered_json summary_json(const Summary& s) {
    nlohmann::ordered_json j;
    j["paths"] = s.paths;
    j["used"] = s.used;
    j["failed"] = s.failed;
    j["boundary_paths"] = s.boundary_paths;
    j["cap_events"] = s.cap_events;
    j["cap_rate"] = s.cap_rate;
    j["mean_W"] = s.mean_W;
    j["se_W"] = s.se_W;
    j["mean_U"] = s.mean_U;
    j["se_U"] = s.se_U;
    j["certainty_equivalent"] = s.certainty_equivalent;
    j["mean_PT"] = s.mean_PT;
    j["se_PT"] = s.se_PT;
    j["mean_gap"] = s.mean_gap;
    j["se_gap"] = s.se_gap;
    j["var_YT"] = s.var_YT;
    j["mean_WM"] = s.mean_WM;
    j["se_WM"] = s.se_WM;
    j["corr_V_Z"] = s.corr_V_Z;
    return j;
}

}  // namespace

std::string report_json(const EquilibriumReport& rep) {
    nlohmann::ordered_json j;
    j["caveat"] = rep.caveat;
    j["verdict"] = rep.verdict;
    const VerifyConfig& c = rep.thresholds;
    j["thresholds"] = {{"thin", c.thin},          {"ks_alpha", c.ks_alpha},   {"lb_alpha", c.lb_alpha},
                       {"lb_lags", c.lb_lags},    {"qv_tol", c.qv_tol},       {"slope_lo", c.slope_lo},
                       {"slope_hi", c.slope_hi},  {"gap_frac", c.gap_frac},   {"se_mult", c.se_mult},
                       {"cap_rate_max", c.cap_rate_max}, {"fail_rate_max", c.fail_rate_max},
                       {"epsilon", c.epsilon},    {"pde_tol", c.pde_tol},     {"kv_tol", c.kv_tol},
                       {"two_history_tol", c.two_history_tol}};
    auto& lv = j["levels"] = nlohmann::ordered_json::array();
    for (const LevelRun& l : rep.levels)
        lv.push_back({{"dt", l.dt}, {"steps", l.steps}, {"summary", summary_json(l.summary)}});
    auto& bl = j["blocks"] = nlohmann::ordered_json::object();
    for (const Block& b : rep.blocks) {
        nlohmann::ordered_json jb;
        jb["pass"] = b.pass;
        auto& checks = jb["checks"] = nlohmann::ordered_json::array();
        for (const Check& ch : b.checks)
            checks.push_back({{"name", ch.name},
                              {"statistic", ch.statistic},
                              {"se_or_pvalue", ch.se_or_pvalue},
                              {"threshold", ch.threshold},
                              {"pass", ch.pass}});
        jb["notes"] = b.notes;
        bl[b.name] = jb;
    }
    if (!rep.perturbation.empty()) {
        auto& pj = j["perturbation"] = nlohmann::ordered_json::array();
        for (const PerturbationEstimate& e : rep.perturbation)
            pj.push_back({{"direction", e.name}, {"eps", e.eps}, {"J0", e.J0}, {"dJ", e.dJ}, {"se", e.se},
                          {"curvature", e.curvature}, {"curvature_se", e.curvature_se}, {"paths_used", e.paths_used}});
    }
    return j.dump(2) + "\n";
}

std::string report_text(const EquilibriumReport& rep) {
    std::ostringstream os;
    os << rep.caveat << "\n\n";
    char line[256];
    for (const LevelRun& l : rep.levels) {
        std::snprintf(line, sizeof line, "dt %-10.6g steps %-6zu mean|P_T-V| %-12.6g E[W] %-12.6g +- %.3g\n", l.dt,
                      l.steps, l.summary.mean_gap, l.summary.mean_W, l.summary.se_W);
        os << line;
    }
    os << "\n";
    for (const Block& b : rep.blocks) {
        os << "[" << (b.pass ? "PASS" : "FAIL") << "] " << b.name << "\n";
        for (const Check& c : b.checks) {
            std::snprintf(line, sizeof line, "    %-4s %-28s stat %-14.6g se/p %-12.4g thr %.4g\n",
                          c.pass ? "ok" : "FAIL", c.name.c_str(), c.statistic, c.se_or_pvalue, c.threshold);
            os << line;
        }
        for (const std::string& n : b.notes) os << "    note: " << n << "\n";
    }
    os << "\nverdict: " << (rep.verdict ? "true" : "false") << "\n";
    return os.str();
}

}  // namespace kylesim
