#include "kylesim/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "kylesim/rng.hpp"

namespace kylesim {

const char* to_string(RuleKind k) {
    switch (k) {
        case RuleKind::bachelier: return "bachelier";
        case RuleKind::black_scholes: return "black_scholes";
        case RuleKind::det_lambda: return "det_lambda";
        case RuleKind::kimura: return "kimura";
        case RuleKind::custom: return "custom";
    }
    return "unknown";
}

const char* to_string(PriceScheme s) { return s == PriceScheme::euler ? "euler" : "log_euler"; }

const char* to_string(EtaScheme s) {
    return s == EtaScheme::exact_exponential ? "exact_exponential" : "euler_factor";
}

double RuleSpec::market_depth(double t, double p) const {
    if (!H_inverse) throw std::logic_error("market depth needs an inverse of H");
    return H(t, H_inverse(t, p)).d2 * lambda(t, p).v;
}

void RuleSpec::validate() const {
    if (!H || !lambda) throw std::invalid_argument("rule needs H and lambda");
    if (gamma > 0.0) throw std::invalid_argument("risk aversion gamma must be <= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon T must be positive");
    if (unit_interval && !(p0 > 0.0 && p0 < 1.0))
        throw std::invalid_argument("P0 must lie in (0,1) for a unit-interval rule");
    if (!(lambda(0.0, p0).v > 0.0)) throw std::invalid_argument("lambda must be positive at P0");
    if (!(H(0.0, xi0).d2 > 0.0)) throw std::invalid_argument("H must be increasing in x");
}

RuleSpec bachelier_rule(double p0, double lambda, NoiseVol sigma, double horizon) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    RuleSpec r;
    r.kind = RuleKind::bachelier;
    r.H = [p0](double, double x) { return Partials{p0 + x, 0.0, 1.0, 0.0}; };
    r.lambda = [lambda](double, double) { return Partials{lambda, 0.0, 0.0, 0.0}; };
    r.H_inverse = [p0](double, double p) { return p - p0; };
    r.p0 = p0;
    r.xi0 = 0.0;
    r.sigma = sigma;
    r.horizon = horizon;
    r.lambda0 = lambda;
    r.validate();
    return r;
}

RuleSpec black_scholes_rule(double p0, double lambda, NoiseVol sigma, double horizon) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(p0 > 0.0)) throw std::invalid_argument("Black-Scholes P0 must be positive");
    RuleSpec r;
    r.kind = RuleKind::black_scholes;
    r.H = [](double, double x) { return Partials{x, 0.0, 1.0, 0.0}; };
    r.lambda = [lambda](double, double p) { return Partials{lambda * p, 0.0, lambda, 0.0}; };
    r.H_inverse = [](double, double p) { return p; };
    r.p0 = p0;
    r.xi0 = p0;
    r.sigma = sigma;
    r.horizon = horizon;
    r.lambda0 = lambda;
    r.scheme = PriceScheme::log_euler;
    r.validate();
    return r;
}

double det_lambda_closed(double lambda0, double gamma, double integrated_variance) {
    return lambda0 / (1.0 - lambda0 * gamma * integrated_variance);
}

RuleSpec det_lambda_rule(double p0, double lambda0, double gamma, NoiseVol sigma, double horizon) {
    if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
    RuleSpec r;
    r.kind = RuleKind::det_lambda;
    r.H = [p0](double, double x) { return Partials{p0 + x, 0.0, 1.0, 0.0}; };
    r.lambda = [lambda0, gamma, sigma](double t, double) {
        const double l = det_lambda_closed(lambda0, gamma, sigma.integrated(0.0, t));
        return Partials{l, gamma * sigma.variance_rate(t) * l * l, 0.0, 0.0};
    };
    r.H_inverse = [p0](double, double p) { return p - p0; };
    r.p0 = p0;
    r.xi0 = 0.0;
    r.sigma = sigma;
    r.gamma = gamma;
    r.horizon = horizon;
    r.lambda0 = lambda0;
    r.validate();
    return r;
}

RuleSpec kimura_rule(double p0, double C, double gamma, NoiseVol sigma, double horizon) {
    if (!(C > 0.0)) throw std::invalid_argument("Kimura C must be positive");
    RuleSpec r;
    r.kind = RuleKind::kimura;
    r.H = [](double, double x) { return Partials{x, 0.0, 1.0, 0.0}; };
    r.lambda = [C](double, double p) {
        return Partials{C * p * (1.0 - p), 0.0, C * (1.0 - 2.0 * p), -2.0 * C};
    };
    r.H_inverse = [](double, double p) { return p; };
    r.p0 = p0;
    r.xi0 = p0;
    r.sigma = sigma;
    r.gamma = gamma;
    r.horizon = horizon;
    r.C = C;
    r.unit_interval = true;
    r.validate();
    return r;
}

RuleState initial_state(const RuleSpec& spec) {
    RuleState s;
    s.xi = spec.xi0;
    s.p = spec.H(0.0, spec.xi0).v;
    s.p_sde = s.p;
    return s;
}

RuleState price_step(const RuleSpec& spec, const RuleState& s, double dY, double dt) {
    RuleState n = s;
    n.clipped = false;
    const double v = spec.sigma.integrated(s.t, s.t + dt);
    const Partials lam = spec.lambda(s.t, s.p);
    const Partials h = spec.H(s.t, s.xi);
    const double a = h.d2 * lam.d2;

    if (spec.scheme == PriceScheme::log_euler) {
        if (!(s.xi > 0.0)) throw std::domain_error("log-Euler step needs positive xi");
        const double r = lam.v / s.xi;
        n.xi = s.xi * std::exp(r * dY - 0.5 * r * r * v);
    } else {
        n.xi = s.xi + lam.v * dY;
    }

    if (spec.eta_scheme == EtaScheme::exact_exponential) {
        n.eta = s.eta * std::exp(a * dY - 0.5 * a * a * v);
    } else {
        const double f = 1.0 + a * dY;
        if (f <= 0.0) n.eta_nonpositive = true;
        n.eta = s.eta * f;
    }

    n.p_sde = s.p_sde + h.d2 * lam.v * dY + h.d1 * dt + 0.5 * h.d22 * lam.v * lam.v * v;
    n.k = s.k + 1;
    n.t = static_cast<double>(n.k) * dt;
    n.p = spec.H(n.t, n.xi).v;

    if (spec.unit_interval) {
        const double lo = spec.clip_eps, hi = 1.0 - spec.clip_eps;
        if (!(n.p >= lo && n.p <= hi)) {
            n.p = std::isnan(n.p) ? lo : std::clamp(n.p, lo, hi);
            n.xi = spec.H_inverse ? spec.H_inverse(n.t, n.p) : n.xi;
            n.boundary = true;
            n.clipped = true;
        }
    }
    if (!std::isfinite(n.p) || !std::isfinite(n.xi)) throw std::domain_error("price left its domain");
    return n;
}

double terminal_demand(const RuleSpec& spec, double v) {
    switch (spec.kind) {
        case RuleKind::bachelier: return (v - spec.p0) / spec.lambda0;
        case RuleKind::black_scholes: {
            if (!(v > 0.0)) throw std::domain_error("Black-Scholes target must be positive");
            const double s2 = spec.sigma.integrated(0.0, spec.horizon);
            const double l = spec.lambda0;
            return (std::log(v / spec.p0) + 0.5 * l * l * s2) / l;
        }
        default:
            throw std::invalid_argument(std::string("no terminal demand map for rule ") +
                                        to_string(spec.kind));
    }
}

RuleGrid make_rule_grid(double t0, double t1, std::size_t nt, double x0, double x1, std::size_t nx) {
    if (nt < 1 || nx < 1) throw std::invalid_argument("grid needs at least one node per axis");
    RuleGrid g;
    for (std::size_t i = 0; i < nt; ++i)
        g.t.push_back(nt == 1 ? t0 : t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(nt - 1));
    for (std::size_t j = 0; j < nx; ++j)
        g.x.push_back(nx == 1 ? x0 : x0 + (x1 - x0) * static_cast<double>(j) / static_cast<double>(nx - 1));
    return g;
}

RuleGrid default_rule_grid(const RuleSpec& spec, std::size_t nt, std::size_t nx) {
    const double T = spec.horizon;
    switch (spec.kind) {
        case RuleKind::black_scholes: return make_rule_grid(0.0, T, nt, 0.05 * spec.p0, 20.0 * spec.p0, nx);
        case RuleKind::kimura: return make_rule_grid(0.0, T, nt, 0.01, 0.99, nx);
        default: return make_rule_grid(0.0, T, nt, -3.0, 3.0, nx);
    }
}

double check_H_equation(const RuleSpec& spec, const RuleGrid& grid) {
    double worst = 0.0;
    for (double t : grid.t)
        for (double x : grid.x) {
            const Partials h = spec.H(t, x);
            const double l = spec.lambda(t, h.v).v;
            worst = std::max(worst, std::abs(h.d1 + 0.5 * h.d22 * l * l * spec.sigma.variance_rate(t)));
        }
    return worst;
}

double check_lambda_equation(const RuleSpec& spec, const RuleGrid& grid) {
    double worst = 0.0;
    for (double t : grid.t)
        for (double x : grid.x) {
            const Partials h = spec.H(t, x);
            const Partials l = spec.lambda(t, h.v);
            const double s2 = spec.sigma.variance_rate(t);
            double r;
            if (spec.gamma == 0.0) {
                const double lh = l.v * h.d2;
                r = l.d1 + 0.5 * s2 * lh * lh * l.d22;
            } else {
                r = l.d1 / (l.v * l.v) + 0.5 * s2 * h.d2 * h.d2 * l.d22 - spec.gamma * h.d2 * s2;
            }
            worst = std::max(worst, std::abs(r));
        }
    return worst;
}

std::vector<double> solve_lambda_ode(double lambda0, double gamma, const NoiseVol& sigma,
                                     const TimeGrid& grid) {
    if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
    if (gamma > 0.0) throw std::invalid_argument("gamma must be <= 0");
    std::vector<double> out(grid.size());
    out[0] = lambda0;
    const double h = grid.dt();
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        const double t = grid.time(k), l = out[k];
        // step-averaged sigma^2: one-sided at jumps of a piecewise sigma_Z
        const double rate = sigma.integrated(t, t + h) / h;
        auto f = [&](double x) { return gamma * rate * x * x; };
        const double k1 = f(l);
        const double k2 = f(l + 0.5 * h * k1);
        const double k3 = f(l + 0.5 * h * k2);
        const double k4 = f(l + h * k3);
        out[k + 1] = l + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return out;
}

std::vector<RuleState> run_rule(const RuleSpec& spec, const SamplePath& y) {
    std::vector<RuleState> out;
    out.reserve(y.size());
    out.push_back(initial_state(spec));
    const double dt = y.grid().dt();
    for (std::size_t k = 0; k + 1 < y.size(); ++k)
        out.push_back(price_step(spec, out.back(), y[k + 1] - y[k], dt));
    return out;
}

KernelFactors kernel_factors(const RuleSpec& spec, const std::vector<RuleState>& traj) {
    KernelFactors kf;
    kf.K1.reserve(traj.size());
    kf.K2.reserve(traj.size());
    for (const RuleState& s : traj) {
        if (!(s.eta > 0.0) || s.eta_nonpositive) kf.eta_nonpositive = true;
        kf.K1.push_back(spec.lambda(s.t, s.p).v / s.eta);
        kf.K2.push_back(spec.H(s.t, s.xi).d2 * s.eta);
    }
    return kf;
}

KernelFactors kernel_factors(const RuleSpec& spec, const SamplePath& y) {
    return kernel_factors(spec, run_rule(spec, y));
}

// ---- RuleFunctional ----

const RuleState& RuleFunctional::state_at(const StoppedView& y) const {
    if (cache_id_ != y.source_id()) {
        cache_id_ = y.source_id();
        prefix_.assign(1, initial_state(spec_));
    }
    const double dt = y.grid().dt();
    while (prefix_.size() <= y.index()) {
        const std::size_t i = prefix_.size() - 1;
        prefix_.push_back(price_step(spec_, prefix_.back(), y[i + 1] - y[i], dt));
    }
    return prefix_[y.index()];
}

double RuleFunctional::jump_flow(double t, double xi, double h) const {
    auto f = [&](double x) { return spec_.lambda(t, spec_.H(t, x).v).v; };
    const int n = 4;
    const double dh = h / n;
    for (int i = 0; i < n; ++i) {
        const double k1 = f(xi);
        const double k2 = f(xi + 0.5 * dh * k1);
        const double k3 = f(xi + 0.5 * dh * k2);
        const double k4 = f(xi + dh * k3);
        xi += dh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return xi;
}

double RuleFunctional::extension_flow(double t, double xi, double delta, double a) const {
    auto f = [&](double s, double x) {
        const Partials h = spec_.H(s, x);
        const Partials l = spec_.lambda(s, h.v);
        return -0.5 * a * l.d2 * h.d2 * l.v;
    };
    const int n = 4;
    const double ds = delta / n;
    for (int i = 0; i < n; ++i) {
        const double s = t + ds * i;
        const double k1 = f(s, xi);
        const double k2 = f(s + 0.5 * ds, xi + 0.5 * ds * k1);
        const double k3 = f(s + 0.5 * ds, xi + 0.5 * ds * k2);
        const double k4 = f(s + ds, xi + ds * k3);
        xi += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return xi;
}

double RuleFunctional::evaluate(const StoppedView& y, const Surgery& s) const {
    const RuleState& st = state_at(y);
    if (s.jump == 0.0 && s.extension == 0 && s.post_jump == 0.0) return st.p;
    double t = st.t;
    double xi = st.xi;
    if (s.jump != 0.0) xi = jump_flow(t, xi, s.jump);
    if (s.extension > 0) {
        const double delta = static_cast<double>(s.extension) * y.grid().dt();
        xi = extension_flow(t, xi, delta, spec_.sigma.variance_rate(st.t));
        t += delta;
    }
    if (s.post_jump != 0.0) xi = jump_flow(t, xi, s.post_jump);
    return spec_.H(t, xi).v;
}

std::optional<double> RuleFunctional::analytic_vertical(const StoppedView& y) const {
    const RuleState& st = state_at(y);
    return spec_.H(st.t, st.xi).d2 * spec_.lambda(st.t, st.p).v;
}

std::optional<double> RuleFunctional::analytic_vertical_second(const StoppedView& y) const {
    const RuleState& st = state_at(y);
    const Partials h = spec_.H(st.t, st.xi);
    const Partials l = spec_.lambda(st.t, st.p);
    return h.d22 * l.v * l.v + h.d2 * h.d2 * l.v * l.d2;
}

std::optional<double> RuleFunctional::analytic_horizontal(const StoppedView& y) const {
    const RuleState& st = state_at(y);
    const Partials h = spec_.H(st.t, st.xi);
    const Partials l = spec_.lambda(st.t, st.p);
    const double s2 = spec_.sigma.variance_rate(st.t);
    return h.d1 - 0.5 * s2 * h.d2 * h.d2 * l.d2 * l.v;
}

EquilibriumResiduals check_equilibrium_conditions(const RuleSpec& spec, const PathBundle& paths,
                                                  const DerivativeConfig& cfg_in,
                                                  std::size_t node_stride) {
    if (paths.size() < 10) throw std::invalid_argument("equilibrium check needs at least 10 paths");
    if (node_stride == 0) node_stride = 1;
    DerivativeConfig cfg = cfg_in;
    cfg.prefer_analytic = false;
    EquilibriumResiduals out;
    out.min_gradient = std::numeric_limits<double>::infinity();
    const std::size_t n = paths.grid.n_steps();
    for (const SamplePath& y : paths.paths) {
        RuleFunctional F(spec);
        const std::vector<RuleState> traj = run_rule(spec, y);
        const KernelFactors kf = kernel_factors(spec, traj);
        for (std::size_t k = 0; k + cfg.horizontal_steps <= n; k += node_stride) {
            if (traj[k].boundary) {
                ++out.skipped_boundary;
                continue;
            }
            const double g = vertical_derivative(F, y, k, cfg);
            const double g2 = vertical_second(F, y, k, cfg);
            const double d = horizontal_derivative(F, y, k, cfg);
            const CommutatorResult L = commutator(F, y, k, cfg);
            const double s2 = spec.sigma.variance_rate(traj[k].t);
            out.h_residual = std::max(out.h_residual, std::abs(d + 0.5 * g2 * s2));
            out.commutator_residual =
                std::max(out.commutator_residual, std::abs(L.value - spec.gamma * s2 * g * g));
            out.commutator_noise = std::max(out.commutator_noise, L.noise);
            out.min_gradient = std::min(out.min_gradient, g);
            out.kv_relative = std::max(out.kv_relative, std::abs(kf.K1[k] * kf.K2[k] - g) / std::abs(g));
            ++out.nodes;
        }
    }
    return out;
}

TwoHistoryResult two_history_check(const RuleSpec& spec, const TimeGrid& grid, std::size_t k,
                                   std::uint64_t seed, const DerivativeConfig& cfg_in) {
    if (k == 0 || k > grid.n_steps()) throw std::out_of_range("two-history node must be in 1..n");
    DerivativeConfig cfg = cfg_in;
    cfg.prefer_analytic = false;
    const PathBundle b = brownian_bundle(grid, 2, spec.sigma(0.0), seed);
    const SamplePath& ya = b.paths[0];
    const std::vector<RuleState> ta = run_rule(spec, ya);
    const std::vector<RuleState> tb = run_rule(spec, b.paths[1]);
    const double target = ta[k].p;
    const RuleState& prev = tb[k - 1];
    auto price = [&](double dy) { return price_step(spec, prev, dy, grid.dt()).p; };

    // price is increasing in the last increment: bracket then bisect
    double lo = -0.1, hi = 0.1;
    for (int i = 0; i < 60 && price(lo) > target; ++i) lo *= 2.0;
    for (int i = 0; i < 60 && price(hi) < target; ++i) hi *= 2.0;
    if (price(lo) > target || price(hi) < target)
        throw std::runtime_error("two-history check could not match the price");
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (price(mid) < target ? lo : hi) = mid;
    }
    std::vector<double> vb = b.paths[1].values();
    vb[k] = vb[k - 1] + 0.5 * (lo + hi);
    const SamplePath yb(grid, std::move(vb));

    RuleFunctional Fa(spec), Fb(spec);
    TwoHistoryResult r;
    r.price_a = Fa(ya, k);
    r.price_b = Fb(yb, k);
    r.grad_a = vertical_derivative(Fa, ya, k, cfg);
    r.grad_b = vertical_derivative(Fb, yb, k, cfg);
    r.relative_gap = std::abs(r.grad_a - r.grad_b) / std::abs(r.grad_a);
    return r;
}

}  // namespace kylesim
