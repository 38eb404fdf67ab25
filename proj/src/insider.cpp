#include "kylesim/insider.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace kylesim {

double drift_gaussian_bridge(double y_star, double y, double t, double T, double dt) {
    if (t >= T) throw std::domain_error("bridge drift evaluated at or after the horizon");
    return (y_star - y) / std::max(T - t, dt);
}

double drift_diffusion_density(double target, double x, double s2, const TransitionDensity& p,
                               double G) {
    if (p.log_pdf(x, target, s2) < -700.0)
        throw std::domain_error("bridge target unreachable numerically");
    return G * p.score(x, target, s2);
}

double drift_det_lambda(double target, double p, double lambda_t, double tail) {
    if (!(tail > 0.0)) throw std::domain_error("empty tail integral for the deterministic-lambda bridge");
    return lambda_t * (target - p) / tail;
}

double drift_kimura(double target, double p, double c, double tau) {
    if (!(p > 0.0 && p < 1.0) || !(target > 0.0 && target < 1.0))
        throw std::domain_error("Kimura bridge needs price and target in (0,1)");
    if (!(tau > 0.0)) throw std::domain_error("Kimura bridge evaluated at the horizon");
    return 0.5 * c * (1.0 - 2.0 * p) + (logit(target) - logit(p)) / (c * tau);
}

double drift_first_passage(double a, double u, double w, double t, bool hit, double dt) {
    if (hit) return 0.0;
    const double x = w - a;
    if (x == 0.0) return 0.0;
    const double rem = std::max(u - t, dt);
    if (!(rem > 0.0)) throw std::domain_error("first-passage drift evaluated after the target time");
    return 1.0 / x - x / rem;
}

const char* to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::none: return "none";
        case StrategyKind::gaussian_bridge: return "gaussian_bridge";
        case StrategyKind::diffusion_density_bridge: return "diffusion_density_bridge";
        case StrategyKind::det_lambda_bridge: return "det_lambda_bridge";
        case StrategyKind::kimura_bridge: return "kimura_bridge";
        case StrategyKind::first_passage: return "first_passage";
        case StrategyKind::custom_table: return "custom_table";
    }
    return "unknown";
}

StrategyKind strategy_kind_from_string(const std::string& s) {
    for (auto k : {StrategyKind::none, StrategyKind::gaussian_bridge, StrategyKind::diffusion_density_bridge,
                   StrategyKind::det_lambda_bridge, StrategyKind::kimura_bridge, StrategyKind::first_passage,
                   StrategyKind::custom_table})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown strategy '" + s + "'");
}

// ---- drift table ----

namespace {
std::size_t bracket(const std::vector<double>& axis, double q, double& w) {
    if (axis.size() == 1 || q <= axis.front()) {
        w = 0.0;
        return 0;
    }
    if (q >= axis.back()) {
        w = 1.0;
        return axis.size() - 2;
    }
    const auto it = std::upper_bound(axis.begin(), axis.end(), q);
    const std::size_t i = static_cast<std::size_t>(it - axis.begin()) - 1;
    w = (q - axis[i]) / (axis[i + 1] - axis[i]);
    return i;
}
}  // namespace

double DriftTable::at(double tq, double yq) const {
    if (theta.empty()) throw std::logic_error("drift table is empty");
    double wt, wy;
    const std::size_t i = bracket(t, tq, wt);
    const std::size_t j = bracket(y, yq, wy);
    const std::size_t ny = y.size();
    auto v = [&](std::size_t a, std::size_t b) { return theta[a * ny + b]; };
    const std::size_t i1 = t.size() == 1 ? i : i + 1;
    const std::size_t j1 = ny == 1 ? j : j + 1;
    return (1 - wt) * ((1 - wy) * v(i, j) + wy * v(i, j1)) + wt * ((1 - wy) * v(i1, j) + wy * v(i1, j1));
}

void DriftTable::validate() const {
    if (t.empty() || y.empty()) throw std::invalid_argument("drift table needs t and y nodes");
    if (theta.size() != t.size() * y.size()) throw std::invalid_argument("drift table is not a full grid");
    if (!std::is_sorted(t.begin(), t.end()) || !std::is_sorted(y.begin(), y.end()))
        throw std::invalid_argument("drift table axes must be increasing");
    for (double v : theta)
        if (!std::isfinite(v)) throw std::invalid_argument("drift table holds a non-finite value");
}

DriftTable DriftTable::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("drift table file not found: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("drift table is empty: " + path);
    std::map<std::pair<double, double>, double> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            throw std::invalid_argument("drift table line " + std::to_string(lineno) + " needs t,y,theta");
        try {
            cells[{std::stod(a), std::stod(b)}] = std::stod(c);
        } catch (const std::exception&) {
            throw std::invalid_argument("drift table line " + std::to_string(lineno) + " is not numeric");
        }
    }
    DriftTable tab;
    for (const auto& [key, val] : cells) {
        if (tab.t.empty() || tab.t.back() != key.first) tab.t.push_back(key.first);
        if (std::find(tab.y.begin(), tab.y.end(), key.second) == tab.y.end()) tab.y.push_back(key.second);
    }
    std::sort(tab.y.begin(), tab.y.end());
    for (double tv : tab.t)
        for (double yv : tab.y) {
            auto it = cells.find({tv, yv});
            if (it == cells.end()) throw std::invalid_argument("drift table is not a full grid: " + path);
            tab.theta.push_back(it->second);
        }
    tab.validate();
    return tab;
}

DriftTable DriftTable::constant(double value, double T) {
    DriftTable tab;
    tab.t = {0.0, T};
    tab.y = {-1.0, 1.0};
    tab.theta.assign(4, value);
    return tab;
}

// ---- strategy ----

DensityKind density_for_rule(const RuleSpec& rule) {
    switch (rule.kind) {
        case RuleKind::bachelier:
        case RuleKind::det_lambda: return DensityKind::gaussian;
        case RuleKind::black_scholes: return DensityKind::lognormal;
        case RuleKind::kimura: return DensityKind::kimura;
        default: throw std::invalid_argument("no transition density for a custom rule");
    }
}

Strategy::Strategy(const StrategySpec& spec, const RuleSpec& rule, const TimeGrid& grid)
    : spec_(spec), rule_(rule), grid_(grid), cap_(spec.cap > 0.0 ? spec.cap : 1e3 / grid.horizon()),
      density_(DensityKind::gaussian) {
    const std::size_t n = grid.n_steps();
    const double T = grid.horizon(), dt = grid.dt();
    switch (spec.kind) {
        case StrategyKind::gaussian_bridge:
            if (rule.kind != RuleKind::bachelier && rule.kind != RuleKind::black_scholes)
                throw std::invalid_argument("gaussian_bridge needs a bachelier or black_scholes rule");
            break;
        case StrategyKind::diffusion_density_bridge: density_ = density_for_rule(rule); break;
        case StrategyKind::det_lambda_bridge:
            if (rule.kind != RuleKind::det_lambda)
                throw std::invalid_argument("det_lambda_bridge needs a det_lambda rule");
            break;
        case StrategyKind::kimura_bridge:
            if (rule.kind != RuleKind::kimura) throw std::invalid_argument("kimura_bridge needs a kimura rule");
            break;
        case StrategyKind::first_passage:
            if (!rule.sigma.is_constant()) throw std::invalid_argument("first_passage needs a constant sigma_Z");
            if (!(spec.hit_time > 0.0)) throw std::invalid_argument("first_passage hit_time must be positive");
            break;
        case StrategyKind::custom_table: spec.table.validate(); break;
        case StrategyKind::none: break;
    }
    if (spec.target_offset != 0.0 && spec.kind != StrategyKind::gaussian_bridge)
        throw std::invalid_argument("target_offset applies to gaussian_bridge only");

    tau_.resize(n + 1);
    sig_.resize(n + 1);
    s2_.assign(n + 1, 0.0);
    lam_.assign(n + 1, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = grid.time(k);
        tau_[k] = std::max(T - t, dt);
        sig_[k] = rule.sigma(t);
    }
    if (rule.kind == RuleKind::det_lambda) {
        std::vector<double> q(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            lam_[k] = rule.lambda(grid.time(k), rule.p0).v;
            q[k] = lam_[k] * lam_[k] * sig_[k] * sig_[k];
        }
        double tail = 0.0;
        for (std::size_t k = n; k-- > 0;) {
            tail += 0.5 * (q[k] + q[k + 1]) * dt;
            s2_[k] = std::max(tail, q[k] * dt);
        }
    } else if (rule.kind != RuleKind::custom) {
        const double coef = rule.kind == RuleKind::kimura ? rule.C : rule.lambda0;
        for (std::size_t k = 0; k <= n; ++k) {
            const double t = grid.time(k);
            const double iv = std::max(rule.sigma.integrated(t, T), sig_[k] * sig_[k] * dt);
            s2_[k] = coef * coef * iv;
        }
    }
}

Strategy::Target Strategy::prepare(double v) const {
    Target tg;
    tg.v = v;
    if (spec_.kind == StrategyKind::gaussian_bridge) tg.y_star = terminal_demand(rule_, v) + spec_.target_offset;
    return tg;
}

double Strategy::rate(const Target& tg, std::size_t k, double y, double p, bool hit) const {
    const double t = grid_.time(k);
    switch (spec_.kind) {
        case StrategyKind::none: return 0.0;
        case StrategyKind::gaussian_bridge: return (tg.y_star - y) / tau_[k];
        case StrategyKind::diffusion_density_bridge: {
            const double G = rule_.market_depth(t, p) * sig_[k];
            return sig_[k] * drift_diffusion_density(tg.v, p, s2_[k], TransitionDensity{density_}, G);
        }
        case StrategyKind::det_lambda_bridge: {
            const double s2 = sig_[k] * sig_[k];
            return drift_det_lambda(tg.v, p, lam_[k], s2_[k] / s2);
        }
        case StrategyKind::kimura_bridge: {
            if (!(tg.v > 0.0 && tg.v < 1.0) || !(p > 0.0 && p < 1.0))
                throw std::domain_error("Kimura bridge needs price and target in (0,1)");
            const double c = rule_.C * sig_[k];
            const double alpha = 0.5 * c * (1.0 - 2.0 * p) + c * (logit(tg.v) - logit(p)) / s2_[k];
            return sig_[k] * alpha;
        }
        case StrategyKind::first_passage:
            return sig_[k] * drift_first_passage(spec_.level, spec_.hit_time, y / sig_[k], t, hit, grid_.dt());
        case StrategyKind::custom_table: return spec_.table.at(t, y);
    }
    return 0.0;
}

// ---- wealth ----

const char* to_string(WealthRule w) { return w == WealthRule::trapezoid ? "trapezoid" : "left_point"; }

double utility(double W, double gamma) { return gamma == 0.0 ? W : gamma * std::exp(gamma * W); }

double log_abs_utility(double W, double gamma) {
    if (gamma == 0.0) return std::log(std::abs(W));
    return std::log(-gamma) + gamma * W;
}

WealthRecord wealth(double V, const std::vector<double>& prices, const std::vector<double>& theta,
                    const TimeGrid& grid, double gamma, WealthRule rule) {
    const std::size_t n = grid.n_steps();
    if (prices.size() != n + 1) throw std::invalid_argument("wealth needs a price per node");
    if (theta.size() < n) throw std::invalid_argument("wealth needs a rate per step");
    const double dt = grid.dt();
    WealthRecord r;
    for (std::size_t k = 0; k < n; ++k) {
        const double p = rule == WealthRule::trapezoid ? 0.5 * (prices[k] + prices[k + 1]) : prices[k];
        r.W += (V - p) * theta[k] * dt;
    }
    r.utility_overflow = gamma * r.W > 700.0;
    r.log_abs_utility = log_abs_utility(r.W, gamma);
    r.utility = r.utility_overflow ? -std::numeric_limits<double>::infinity() : utility(r.W, gamma);
    r.terminal_gap = std::abs(prices[n] - V);
    return r;
}

double certainty_equivalent(const std::vector<double>& W, double gamma) {
    if (W.empty()) throw std::invalid_argument("certainty equivalent of an empty sample");
    if (gamma == 0.0) {
        double s = 0.0;
        for (double w : W) s += w;
        return s / static_cast<double>(W.size());
    }
    double m = -std::numeric_limits<double>::infinity();
    for (double w : W) m = std::max(m, gamma * w);
    double s = 0.0;
    for (double w : W) s += std::exp(gamma * w - m);
    return (m + std::log(s / static_cast<double>(W.size()))) / gamma;
}

// ---- value function ----

double value_function_I(double t, double y, double v, const ValueFunctionSpec& spec) {
    if (y == v) return 0.0;
    auto f = [&](double z) {
        const double gz = spec.g(t, z);
        if (!(gz > 0.0)) throw std::domain_error("market depth g is nonpositive in the integration range");
        return (z - v) / gz;
    };
    using boost::math::quadrature::gauss_kronrod;
    const double lo = std::min(y, v), hi = std::max(y, v);
    const double I = gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, spec.tolerance);
    return y > v ? I : -I;
}

double optimal_value_oracle(const RuleSpec& rule, double v, double tolerance) {
    ValueFunctionSpec vf{[&rule](double t, double z) { return rule.market_depth(t, z); }, tolerance};
    const double I0 = value_function_I(0.0, rule.p0, v, vf);
    const double T = rule.horizon;
    double drift_term;
    if (rule.kind == RuleKind::det_lambda || rule.kind == RuleKind::custom || !rule.sigma.is_constant()) {
        using boost::math::quadrature::gauss_kronrod;
        auto h = [&](double t) { return rule.market_depth(t, v) * rule.sigma.variance_rate(t); };
        drift_term = gauss_kronrod<double, 31>::integrate(h, 0.0, T, 15, tolerance);
    } else {
        drift_term = rule.market_depth(0.0, v) * rule.sigma.integrated(0.0, T);
    }
    return I0 + 0.5 * drift_term;
}

}  // namespace kylesim
