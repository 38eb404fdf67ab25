#include "kylesim/perturbation.hpp"

#include <cmath>
#include <stdexcept>

#include "engine.hpp"
#include "kylesim/market.hpp"

namespace kylesim {

DirectionSpec direction_zero() {
    return {"zero", [](const DirectionContext&) { return 0.0; }};
}
DirectionSpec direction_one() {
    return {"one", [](const DirectionContext&) { return 1.0; }};
}
DirectionSpec direction_time() {
    return {"t_over_T", [](const DirectionContext& c) { return c.t / c.T; }};
}
DirectionSpec direction_sign_gap() {
    return {"sign_gap", [](const DirectionContext& c) {
                const double g = c.V - c.P;
                return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
            }};
}
DirectionSpec direction_bridge() {
    return {"bridge", [](const DirectionContext& c) { return (c.y_star - c.Y) / std::max(c.T - c.t, c.dt); }};
}
std::vector<DirectionSpec> canonical_directions() {
    return {direction_one(), direction_time(), direction_sign_gap()};
}

namespace {

struct Variant {
    RuleState s;
    double Y = 0.0, W = 0.0;
};

struct PathOutcome {
    bool ok = false;
    double W0 = 0.0;
    std::vector<double> Wp, Wm;
};

PathOutcome run_lockstep(const detail::Engine& e, const std::vector<DirectionSpec>& dirs, double eps,
                         std::size_t i) {
    PathOutcome out;
    const std::size_t nd = dirs.size();
    try {
        const TimeGrid& g = e.grid;
        const std::size_t n = g.n_steps();
        const double dt = g.dt();
        NormalStream zr(e.sc.mc.seed, i, Stream::noise);
        NormalStream vr(e.sc.mc.seed, i, Stream::fundamental);
        const double V = e.sc.fundamental.sample(vr);
        const Strategy::Target target = e.strategy.prepare(V);
        const bool trapezoid = e.sc.insider.wealth_rule == WealthRule::trapezoid;

        Variant base{initial_state(e.rule)};
        std::vector<Variant> var(2 * nd, base);
        bool hit = false;
        DirectionContext ctx;
        ctx.T = g.horizon();
        ctx.dt = dt;
        ctx.V = V;
        ctx.y_star = target.y_star;

        auto advance = [&](Variant& v, double theta, double dZ) {
            const double dY = theta * dt + dZ;
            const RuleState nx = price_step(e.rule, v.s, dY, dt);
            if (nx.clipped) throw std::domain_error("boundary event");
            const double pbar = trapezoid ? 0.5 * (v.s.p + nx.p) : v.s.p;
            v.W += (V - pbar) * theta * dt;
            v.Y += dY;
            v.s = nx;
        };

        for (std::size_t k = 0; k < n; ++k) {
            bool capped = false;
            const double theta = e.capped(e.strategy.rate(target, k, base.Y, base.s.p, hit), capped);
            const double dZ = e.step_sd[k] * zr.normal();
            ctx.t = g.time(k);
            ctx.P = base.s.p;
            ctx.Y = base.Y;
            for (std::size_t d = 0; d < nd; ++d) {
                const double b = dirs[d].beta(ctx);
                advance(var[2 * d], theta + eps * b, dZ);
                advance(var[2 * d + 1], theta - eps * b, dZ);
            }
            const double y_prev = base.Y;
            advance(base, theta, dZ);
            if (!hit && e.crossed(y_prev, base.Y)) hit = true;
        }
        out.W0 = base.W;
        out.Wp.resize(nd);
        out.Wm.resize(nd);
        for (std::size_t d = 0; d < nd; ++d) {
            out.Wp[d] = var[2 * d].W;
            out.Wm[d] = var[2 * d + 1].W;
        }
        out.ok = std::isfinite(out.W0);
    } catch (const std::exception&) {
        out.ok = false;
    }
    return out;
}

}  // namespace

std::vector<PerturbationEstimate> perturb_and_evaluate(const Scenario& sc,
                                                       const std::vector<DirectionSpec>& dirs,
                                                       double eps, int threads) {
    if (!(eps > 0.0)) throw std::invalid_argument("perturbation eps must be positive");
    sc.validate();
    const detail::Engine e(sc, sc.grid());
    const std::size_t N = sc.mc.paths;
    std::vector<PathOutcome> outs(N);
    const int nt = resolve_threads(threads);
    const auto count = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(dynamic, 64) num_threads(nt)
    for (std::ptrdiff_t i = 0; i < count; ++i)
        outs[static_cast<std::size_t>(i)] = run_lockstep(e, dirs, eps, static_cast<std::size_t>(i));

    const double gamma = e.rule.gamma;
    // U(W + d) - U(W) without cancellation
    auto du = [gamma](double W, double d) {
        return gamma == 0.0 ? d : gamma * std::exp(gamma * W) * std::expm1(gamma * d);
    };

    std::vector<PerturbationEstimate> est(dirs.size());
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        PerturbationEstimate& r = est[d];
        r.name = dirs[d].name;
        r.eps = eps;
        double n = 0.0, m1 = 0.0, s1 = 0.0, m2 = 0.0, s2 = 0.0, j0 = 0.0;
        for (const PathOutcome& o : outs) {
            if (!o.ok) continue;
            const double up = du(o.W0, o.Wp[d] - o.W0);
            const double dn = du(o.W0, o.Wm[d] - o.W0);
            const double first = (up - dn) / (2.0 * eps);
            const double second = (up + dn) / (eps * eps);
            n += 1.0;
            const double a = first - m1;
            m1 += a / n;
            s1 += a * (first - m1);
            const double b = second - m2;
            m2 += b / n;
            s2 += b * (second - m2);
            j0 += (utility(o.W0, gamma) - j0) / n;
        }
        r.paths_used = static_cast<std::size_t>(n);
        r.J0 = j0;
        r.dJ = m1;
        r.curvature = m2;
        if (n > 1.0) {
            r.se = std::sqrt(s1 / (n - 1.0) / n);
            r.curvature_se = std::sqrt(s2 / (n - 1.0) / n);
        }
    }
    return est;
}

}  // namespace kylesim
