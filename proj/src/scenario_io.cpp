#include "kylesim/scenario_io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kylesim {

const char* const kCodeVersion = "kylesim 0.1.0";

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// drop a '#' comment that is not inside quotes
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

struct Entry {
    std::string value;
    int line = 0;
};

class Reader {
public:
    Reader(std::map<std::string, Entry> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string str(const std::string& key) const {
        std::string v = raw(key);
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
        return v;
    }
    double num(const std::string& key) const { return parse_num(key, raw(key)); }
    std::uint64_t count(const std::string& key) const {
        const std::string v = raw(key);
        std::uint64_t out = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size())
            throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
        return out;
    }
    bool flag(const std::string& key) const {
        const std::string v = str(key);
        if (v == "true") return true;
        if (v == "false") return false;
        throw ConfigError(key + ": expected true or false, got '" + v + "'");
    }
    std::vector<double> nums(const std::string& key) const {
        std::string v = raw(key);
        if (v.empty() || v.front() != '[') return {parse_num(key, v)};
        if (v.back() != ']') throw ConfigError(key + ": unterminated array");
        v = v.substr(1, v.size() - 2);
        std::vector<double> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            out.push_back(parse_num(key, item));
        }
        return out;
    }

private:
    std::string raw(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError(key + ": missing");
        return it->second.value;
    }
    static double parse_num(const std::string& key, const std::string& v) {
        double out = 0.0;
        const char* b = v.data();
        const char* e = v.data() + v.size();
        if (b != e && *b == '+') ++b;
        const auto [p, ec] = std::from_chars(b, e, out);
        if (ec != std::errc() || p != e || !std::isfinite(out))
            throw ConfigError(key + ": expected a number, got '" + v + "'");
        return out;
    }
    std::map<std::string, Entry> kv_;
};

const std::map<std::string, std::set<std::string>>& grammar() {
    static const std::map<std::string, std::set<std::string>> g = {
        {"model", {"rule", "P0", "lambda", "C", "gamma", "sigma_Z", "T", "scheme", "eta"}},
        {"fundamental", {"law", "mean", "var", "p0", "value"}},
        {"insider", {"strategy", "cap", "target_offset", "level", "hit_time", "table", "wealth_rule"}},
        {"mc", {"paths", "steps", "seed", "dt_levels"}},
        {"output", {"dir", "emit_paths", "checkpoint_times"}},
        {"verify",
         {"thin", "ks_alpha", "lb_alpha", "lb_lags", "qv_tol", "slope_lo", "slope_hi", "gap_frac", "se_mult",
          "cap_rate_max", "fail_rate_max", "epsilon", "pde_tol", "pde_paths", "pde_steps", "pde_stride", "kv_tol",
          "two_history_tol", "bins"}},
    };
    return g;
}

RuleKind rule_from_string(const std::string& key, const std::string& s) {
    for (RuleKind k : {RuleKind::bachelier, RuleKind::black_scholes, RuleKind::det_lambda, RuleKind::kimura})
        if (s == to_string(k)) return k;
    throw ConfigError(key + ": unknown rule '" + s + "'");
}

template <class E>
E enum_from(const std::string& key, const std::string& s, std::initializer_list<E> options) {
    for (E e : options)
        if (s == to_string(e)) return e;
    throw ConfigError(key + ": unknown value '" + s + "'");
}

void positive(const std::string& key, double v) {
    if (!(v > 0.0)) throw ConfigError(key + ": must be positive");
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
    std::map<std::string, Entry> kv;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!grammar().count(section)) throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (section.empty()) throw ConfigError(key + ": key outside any section");
        if (!grammar().at(section).count(key)) throw ConfigError("unknown key [" + section + "] " + key);
        const std::string full = section + "." + key;
        if (kv.count(full)) throw ConfigError(full + ": duplicate key");
        kv[full] = Entry{trim(line.substr(eq + 1)), lineno};
    }
    const Reader r(std::move(kv));
    Scenario sc;

    ModelConfig& m = sc.model;
    m.rule = rule_from_string("model.rule", r.str("model.rule"));
    if (r.has("model.P0")) m.p0 = r.num("model.P0");
    if (r.has("model.lambda")) positive("model.lambda", m.lambda = r.num("model.lambda"));
    if (r.has("model.C")) positive("model.C", m.C = r.num("model.C"));
    if (r.has("model.gamma")) m.gamma = r.num("model.gamma");
    if (m.gamma > 0.0) throw ConfigError("model.gamma: must be <= 0");
    if (r.has("model.sigma_Z")) {
        m.sigma = r.nums("model.sigma_Z");
        if (m.sigma.empty()) throw ConfigError("model.sigma_Z: empty");
        for (double s : m.sigma) positive("model.sigma_Z", s);
    }
    if (r.has("model.T")) positive("model.T", m.T = r.num("model.T"));
    if (r.has("model.scheme"))
        m.scheme = enum_from("model.scheme", r.str("model.scheme"), {PriceScheme::euler, PriceScheme::log_euler});
    if (r.has("model.eta"))
        m.eta = enum_from("model.eta", r.str("model.eta"), {EtaScheme::exact_exponential, EtaScheme::euler_factor});

    InsiderConfig& ins = sc.insider;
    if (r.has("insider.strategy")) {
        try {
            ins.strategy.kind = strategy_kind_from_string(r.str("insider.strategy"));
        } catch (const std::exception&) {
            throw ConfigError("insider.strategy: unknown strategy '" + r.str("insider.strategy") + "'");
        }
    }
    if (r.has("insider.cap")) positive("insider.cap", ins.strategy.cap = r.num("insider.cap"));
    if (r.has("insider.target_offset")) ins.strategy.target_offset = r.num("insider.target_offset");
    if (r.has("insider.level")) ins.strategy.level = r.num("insider.level");
    if (r.has("insider.hit_time")) positive("insider.hit_time", ins.strategy.hit_time = r.num("insider.hit_time"));
    if (r.has("insider.wealth_rule"))
        ins.wealth_rule = enum_from("insider.wealth_rule", r.str("insider.wealth_rule"),
                                    {WealthRule::trapezoid, WealthRule::left_point});
    if (r.has("insider.table")) {
        std::filesystem::path p = r.str("insider.table");
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        ins.table_path = p.lexically_normal().string();
        try {
            ins.strategy.table = DriftTable::from_csv(ins.table_path);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("insider.table: ") + e.what());
        }
    }
    if (ins.strategy.kind == StrategyKind::custom_table && ins.strategy.table.empty())
        throw ConfigError("insider.table: custom_table needs a table file");

    McConfig& mc = sc.mc;
    if (r.has("mc.paths")) mc.paths = r.count("mc.paths");
    if (mc.paths < 1) throw ConfigError("mc.paths: must be at least 1");
    if (r.has("mc.steps")) mc.steps = r.count("mc.steps");
    if (mc.steps < 1) throw ConfigError("mc.steps: must be at least 1");
    if (r.has("mc.seed")) mc.seed = r.count("mc.seed");
    if (r.has("mc.dt_levels")) mc.dt_levels = r.nums("mc.dt_levels");
    for (double dt : mc.dt_levels) {
        positive("mc.dt_levels", dt);
        try {
            steps_for_dt(m.T, dt);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("mc.dt_levels: ") + e.what());
        }
    }

    OutputConfig& out = sc.output;
    if (r.has("output.dir")) out.dir = r.str("output.dir");
    if (r.has("output.emit_paths")) out.emit_paths = r.flag("output.emit_paths");
    if (r.has("output.checkpoint_times")) out.checkpoint_times = r.nums("output.checkpoint_times");

    VerifyConfig& v = sc.verify;
    auto vnum = [&](const char* k, double& dst) {
        if (r.has(std::string("verify.") + k)) dst = r.num(std::string("verify.") + k);
    };
    auto vcount = [&](const char* k, std::size_t& dst) {
        if (r.has(std::string("verify.") + k)) dst = r.count(std::string("verify.") + k);
    };
    vcount("thin", v.thin);
    vnum("ks_alpha", v.ks_alpha);
    vnum("lb_alpha", v.lb_alpha);
    vcount("lb_lags", v.lb_lags);
    vnum("qv_tol", v.qv_tol);
    vnum("slope_lo", v.slope_lo);
    vnum("slope_hi", v.slope_hi);
    vnum("gap_frac", v.gap_frac);
    vnum("se_mult", v.se_mult);
    vnum("cap_rate_max", v.cap_rate_max);
    vnum("fail_rate_max", v.fail_rate_max);
    vnum("epsilon", v.epsilon);
    vnum("pde_tol", v.pde_tol);
    vcount("pde_paths", v.pde_paths);
    vcount("pde_steps", v.pde_steps);
    vcount("pde_stride", v.pde_stride);
    vnum("kv_tol", v.kv_tol);
    vnum("two_history_tol", v.two_history_tol);
    vcount("bins", v.bins);
    if (v.thin < 1) throw ConfigError("verify.thin: must be at least 1");

    VLaw& law = sc.fundamental;
    const std::string lname = r.has("fundamental.law") ? r.str("fundamental.law") : "matched";
    if (lname == "matched") {
        try {
            law = matched_vlaw(sc.rule());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("fundamental.law: ") + e.what());
        }
    } else {
        law.kind = enum_from("fundamental.law", lname,
                             {VLawKind::normal, VLawKind::lognormal, VLawKind::kimura_terminal, VLawKind::point});
    }
    if (r.has("fundamental.mean")) law.mean = r.num("fundamental.mean");
    if (r.has("fundamental.var")) law.var = r.num("fundamental.var");
    if (r.has("fundamental.p0")) law.p0 = r.num("fundamental.p0");
    if (r.has("fundamental.value")) law.value = r.num("fundamental.value");

    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("scenario file not found: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), std::filesystem::path(path).parent_path().string());
}

// ---- JSON ----

namespace {

json scenario_json(const Scenario& sc) {
    json j;
    const ModelConfig& m = sc.model;
    j["model"] = {{"rule", to_string(m.rule)}, {"P0", m.p0},       {"lambda", m.lambda}, {"C", m.C},
                  {"gamma", m.gamma},          {"sigma_Z", m.sigma}, {"T", m.T},
                  {"scheme", m.scheme ? json(to_string(*m.scheme)) : json(nullptr)},
                  {"eta", to_string(m.eta)}};
    const VLaw& v = sc.fundamental;
    j["fundamental"] = {{"law", to_string(v.kind)}, {"mean", v.mean}, {"var", v.var}, {"p0", v.p0}, {"value", v.value}};
    const StrategySpec& s = sc.insider.strategy;
    j["insider"] = {{"strategy", to_string(s.kind)},
                    {"cap", s.cap},
                    {"target_offset", s.target_offset},
                    {"level", s.level},
                    {"hit_time", s.hit_time},
                    {"wealth_rule", to_string(sc.insider.wealth_rule)},
                    {"table_source", sc.insider.table_path},
                    {"table", {{"t", s.table.t}, {"y", s.table.y}, {"theta", s.table.theta}}}};
    j["mc"] = {{"paths", sc.mc.paths}, {"steps", sc.mc.steps}, {"seed", sc.mc.seed}, {"dt_levels", sc.mc.dt_levels}};
    j["output"] = {{"dir", sc.output.dir},
                   {"emit_paths", sc.output.emit_paths},
                   {"checkpoint_times", sc.output.checkpoint_times}};
    const VerifyConfig& c = sc.verify;
    j["verify"] = {{"thin", c.thin},         {"ks_alpha", c.ks_alpha},   {"lb_alpha", c.lb_alpha},
                   {"lb_lags", c.lb_lags},   {"qv_tol", c.qv_tol},       {"slope_lo", c.slope_lo},
                   {"slope_hi", c.slope_hi}, {"gap_frac", c.gap_frac},   {"se_mult", c.se_mult},
                   {"cap_rate_max", c.cap_rate_max}, {"fail_rate_max", c.fail_rate_max},
                   {"epsilon", c.epsilon},   {"pde_tol", c.pde_tol},     {"pde_paths", c.pde_paths},
                   {"pde_steps", c.pde_steps}, {"pde_stride", c.pde_stride}, {"kv_tol", c.kv_tol},
                   {"two_history_tol", c.two_history_tol}, {"bins", c.bins}};
    return j;
}

Scenario scenario_from(const json& j) {
    Scenario sc;
    try {
        const json& m = j.at("model");
        sc.model.rule = rule_from_string("model.rule", m.at("rule").get<std::string>());
        sc.model.p0 = m.at("P0");
        sc.model.lambda = m.at("lambda");
        sc.model.C = m.at("C");
        sc.model.gamma = m.at("gamma");
        sc.model.sigma = m.at("sigma_Z").get<std::vector<double>>();
        sc.model.T = m.at("T");
        if (!m.at("scheme").is_null())
            sc.model.scheme = enum_from("model.scheme", m.at("scheme").get<std::string>(),
                                        {PriceScheme::euler, PriceScheme::log_euler});
        sc.model.eta = enum_from("model.eta", m.at("eta").get<std::string>(),
                                 {EtaScheme::exact_exponential, EtaScheme::euler_factor});
        const json& f = j.at("fundamental");
        sc.fundamental.kind = enum_from("fundamental.law", f.at("law").get<std::string>(),
                                        {VLawKind::normal, VLawKind::lognormal, VLawKind::kimura_terminal, VLawKind::point});
        sc.fundamental.mean = f.at("mean");
        sc.fundamental.var = f.at("var");
        sc.fundamental.p0 = f.at("p0");
        sc.fundamental.value = f.at("value");
        const json& in = j.at("insider");
        StrategySpec& s = sc.insider.strategy;
        s.kind = strategy_kind_from_string(in.at("strategy").get<std::string>());
        s.cap = in.at("cap");
        s.target_offset = in.at("target_offset");
        s.level = in.at("level");
        s.hit_time = in.at("hit_time");
        sc.insider.wealth_rule = enum_from("insider.wealth_rule", in.at("wealth_rule").get<std::string>(),
                                           {WealthRule::trapezoid, WealthRule::left_point});
        sc.insider.table_path = in.at("table_source");
        s.table.t = in.at("table").at("t").get<std::vector<double>>();
        s.table.y = in.at("table").at("y").get<std::vector<double>>();
        s.table.theta = in.at("table").at("theta").get<std::vector<double>>();
        const json& mc = j.at("mc");
        sc.mc.paths = mc.at("paths");
        sc.mc.steps = mc.at("steps");
        sc.mc.seed = mc.at("seed");
        sc.mc.dt_levels = mc.at("dt_levels").get<std::vector<double>>();
        const json& o = j.at("output");
        sc.output.dir = o.at("dir");
        sc.output.emit_paths = o.at("emit_paths");
        sc.output.checkpoint_times = o.at("checkpoint_times").get<std::vector<double>>();
        const json& v = j.at("verify");
        VerifyConfig& c = sc.verify;
        c.thin = v.at("thin");
        c.ks_alpha = v.at("ks_alpha");
        c.lb_alpha = v.at("lb_alpha");
        c.lb_lags = v.at("lb_lags");
        c.qv_tol = v.at("qv_tol");
        c.slope_lo = v.at("slope_lo");
        c.slope_hi = v.at("slope_hi");
        c.gap_frac = v.at("gap_frac");
        c.se_mult = v.at("se_mult");
        c.cap_rate_max = v.at("cap_rate_max");
        c.fail_rate_max = v.at("fail_rate_max");
        c.epsilon = v.at("epsilon");
        c.pde_tol = v.at("pde_tol");
        c.pde_paths = v.at("pde_paths");
        c.pde_steps = v.at("pde_steps");
        c.pde_stride = v.at("pde_stride");
        c.kv_tol = v.at("kv_tol");
        c.two_history_tol = v.at("two_history_tol");
        c.bins = v.at("bins");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    return sc;
}

}  // namespace

std::string scenario_to_json(const Scenario& sc) { return scenario_json(sc).dump(2) + "\n"; }

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
    return scenario_from(j.contains("scenario") ? j.at("scenario") : j);
}

std::string manifest_json(const Scenario& sc) {
    json j;
    j["code_version"] = kCodeVersion;
    j["seed"] = sc.mc.seed;
    j["scenario"] = scenario_json(sc);
    return j.dump(2) + "\n";
}

Scenario load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("manifest file not found: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return scenario_from_json(ss.str());
}

// ---- tables ----

std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string result_csv(const SimulationResult& r) {
    std::string out = "path_id,V,Y_T,P_T,W_T,utility,cap_events,boundary_events\n";
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const PathRecord& p = r.records[i];
        if (p.failed) {
            out += std::to_string(i) + ",,,,,," + std::to_string(p.cap_events) + "," +
                   std::to_string(p.boundary_events) + "\n";
            continue;
        }
        out += std::to_string(i) + "," + format_double(p.V) + "," + format_double(p.Y_T) + "," +
               format_double(p.P_T) + "," + format_double(p.W_T) + "," + format_double(p.utility) + "," +
               std::to_string(p.cap_events) + "," + std::to_string(p.boundary_events) + "\n";
    }
    return out;
}

std::string summary_json(const SimulationResult& r) {
    const Summary& s = r.summary;
    json j;
    j["paths"] = s.paths;
    j["steps"] = r.grid.n_steps();
    j["used"] = s.used;
    j["failed"] = s.failed;
    j["boundary_paths"] = s.boundary_paths;
    j["cap_events"] = s.cap_events;
    j["cap_rate"] = s.cap_rate;
    j["mean_W"] = s.mean_W;
    j["se_W"] = s.se_W;
    j["mean_utility"] = s.mean_U;
    j["se_utility"] = s.se_U;
    j["certainty_equivalent"] = s.certainty_equivalent;
    j["mean_P_T"] = s.mean_PT;
    j["se_P_T"] = s.se_PT;
    j["mean_terminal_gap"] = s.mean_gap;
    j["se_terminal_gap"] = s.se_gap;
    j["var_Y_T"] = s.var_YT;
    j["mean_W_M"] = s.mean_WM;
    j["se_W_M"] = s.se_WM;
    j["noise_step_mean"] = s.dz_mean;
    j["noise_step_var"] = s.dz_var;
    j["corr_V_Z_T"] = s.corr_V_Z;
    j["utility_overflows"] = s.utility_overflows;
    return j.dump(2) + "\n";
}

std::string paths_csv(const Scenario& sc) {
    std::string out = "path_id,t,Z,Y,P,theta,W,capped,boundary\n";
    for (std::size_t i = 0; i < sc.mc.paths; ++i) {
        std::vector<TrajectoryRow> rows;
        try {
            rows = replay(sc, i);
        } catch (const SimulationAborted&) {
            continue;
        }
        for (const TrajectoryRow& t : rows)
            out += std::to_string(i) + "," + format_double(t.t) + "," + format_double(t.Z) + "," +
                   format_double(t.Y) + "," + format_double(t.P) + "," + format_double(t.theta) + "," +
                   format_double(t.W) + "," + (t.capped ? "1" : "0") + "," + (t.boundary ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace kylesim
