#include "kylesim/market.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "engine.hpp"

namespace kylesim {

using detail::Engine;

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("KYLESIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

namespace {

struct PathSinks {
    double* checkpoints = nullptr;
    std::size_t n_checkpoints = 0;
    const std::size_t* checkpoint_nodes = nullptr;
    double* increments = nullptr;
    std::size_t n_increments = 0;
    std::size_t thin = 8;
    std::vector<TrajectoryRow>* trace = nullptr;
};

void run_path(const Engine& e, std::size_t i, PathRecord& rec, const PathSinks& sink, std::string* error) {
    try {
        const TimeGrid& g = e.grid;
        const std::size_t n = g.n_steps();
        const double dt = g.dt();
        NormalStream zr(e.sc.mc.seed, i, Stream::noise);
        NormalStream vr(e.sc.mc.seed, i, Stream::fundamental);
        const double V = e.sc.fundamental.sample(vr);
        rec.V = V;
        const Strategy::Target target = e.strategy.prepare(V);
        const bool trapezoid = e.sc.insider.wealth_rule == WealthRule::trapezoid;

        RuleState s = initial_state(e.rule);
        double Y = 0.0, Z = 0.0, W = 0.0, noise_w = 0.0, sum_ydp = 0.0, qv = 0.0, dzsq = 0.0;
        bool hit = false;
        std::size_t inc_j = 0, cp_j = 0;
        if (sink.trace) sink.trace->push_back(TrajectoryRow{0.0, 0.0, 0.0, s.p, 0.0, 0.0, false, false});

        for (std::size_t k = 0; k < n; ++k) {
            const double raw = e.strategy.rate(target, k, Y, s.p, hit);
            if (!std::isfinite(raw)) throw std::domain_error("non-finite insider rate");
            bool capped = false;
            const double theta = e.capped(raw, capped);
            if (capped) ++rec.cap_events;
            const double dZ = e.step_sd[k] * zr.normal();
            const double dY = theta * dt + dZ;
            const RuleState nx = price_step(e.rule, s, dY, dt);
            if (nx.clipped) ++rec.boundary_events;

            const double pbar = trapezoid ? 0.5 * (s.p + nx.p) : s.p;
            W += (V - pbar) * theta * dt;
            noise_w += (V - nx.p) * dZ;
            sum_ydp += Y * (nx.p - s.p);
            if (sink.increments && k % sink.thin == 0 && inc_j < sink.n_increments)
                sink.increments[inc_j++] = dY / e.step_sd[k];

            const double y_prev = Y;
            Y += dY;
            Z += dZ;
            qv += dY * dY;
            dzsq += dZ * dZ;
            if (!hit && e.crossed(y_prev, Y)) hit = true;
            s = nx;
            if (cp_j < sink.n_checkpoints && k + 1 == sink.checkpoint_nodes[cp_j]) sink.checkpoints[cp_j++] = s.p;
            if (sink.trace)
                sink.trace->push_back(TrajectoryRow{g.time(k + 1), Z, Y, s.p, theta, W, capped, nx.clipped});
        }

        rec.Y_T = Y;
        rec.Z_T = Z;
        rec.P_T = s.p;
        rec.W_T = W;
        rec.WM = -W - noise_w;
        rec.WM_remark = -Y * (V - s.p) - sum_ydp;
        rec.qv = qv;
        rec.dz_sq = dzsq;
        const double gamma = e.rule.gamma;
        rec.utility_overflow = gamma * W > 700.0;
        rec.utility = rec.utility_overflow ? -HUGE_VAL : utility(W, gamma);
        rec.log_abs_utility = gamma == 0.0 ? 0.0 : log_abs_utility(W, gamma);
    } catch (const std::exception& ex) {
        rec.failed = true;
        if (error) *error = ex.what();
    }
}

struct MeanSe {
    double mean = 0.0, se = 0.0, var = 0.0;
};

template <class F>
MeanSe moments(const std::vector<PathRecord>& recs, F&& value, bool used_only = true) {
    double n = 0.0, mean = 0.0, m2 = 0.0;
    for (const PathRecord& r : recs) {
        if (r.failed || (used_only && r.boundary_events > 0)) continue;
        const double x = value(r);
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    MeanSe out;
    out.mean = mean;
    out.var = n > 1.0 ? m2 / (n - 1.0) : 0.0;
    out.se = n > 0.0 ? std::sqrt(out.var / n) : 0.0;
    return out;
}

SimulationResult run_all(const Scenario& sc, const SimOptions& opt, bool parallel) {
    sc.validate();
    const Engine e(sc, sc.grid());
    const std::size_t N = sc.mc.paths;
    const std::size_t n = e.grid.n_steps();

    SimulationResult res;
    res.grid = e.grid;
    res.records.resize(N);
    if (opt.collect_checkpoints) {
        for (double t : sc.checkpoint_times()) {
            const auto k = static_cast<std::size_t>(std::llround(t / e.grid.dt()));
            res.checkpoint_nodes.push_back(std::clamp<std::size_t>(k, 1, n));
        }
        res.checkpoint_prices.assign(N * res.checkpoint_nodes.size(), 0.0);
    }
    const std::size_t thin = std::max<std::size_t>(1, opt.thin);
    if (opt.collect_increments) {
        res.increments_per_path = (n + thin - 1) / thin;
        res.increments.assign(N * res.increments_per_path, 0.0);
    }
    std::vector<std::string> errors(N);

    auto one = [&](std::size_t i) {
        PathSinks sink;
        sink.n_checkpoints = res.checkpoint_nodes.size();
        sink.checkpoint_nodes = res.checkpoint_nodes.data();
        if (sink.n_checkpoints) sink.checkpoints = res.checkpoint_prices.data() + i * sink.n_checkpoints;
        if (opt.collect_increments) {
            sink.increments = res.increments.data() + i * res.increments_per_path;
            sink.n_increments = res.increments_per_path;
            sink.thin = thin;
        }
        run_path(e, i, res.records[i], sink, &errors[i]);
    };

    if (parallel) {
        const int nt = resolve_threads(opt.threads);
        const auto count = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(dynamic, 64) num_threads(nt)
        for (std::ptrdiff_t i = 0; i < count; ++i) one(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < N; ++i) one(i);
    }

    std::size_t failed = 0;
    std::string first;
    for (std::size_t i = 0; i < N; ++i)
        if (res.records[i].failed) {
            if (failed == 0) first = "path " + std::to_string(i) + ": " + errors[i];
            ++failed;
        }
    if (static_cast<double>(failed) > opt.fail_rate_max * static_cast<double>(N))
        throw SimulationAborted(std::to_string(failed) + " of " + std::to_string(N) +
                                " paths failed (limit " + std::to_string(opt.fail_rate_max * 100.0) +
                                "%); first failure " + first);
    res.summary = summarize(res, e.rule.gamma);
    return res;
}

}  // namespace

Summary summarize(const SimulationResult& r, double gamma) {
    Summary s;
    const auto& recs = r.records;
    s.paths = recs.size();
    std::vector<double> used_w;
    double zsum = 0.0, zsq = 0.0, steps = 0.0;
    for (const PathRecord& p : recs) {
        if (p.failed) {
            ++s.failed;
            continue;
        }
        s.cap_events += p.cap_events;
        if (p.utility_overflow) ++s.utility_overflows;
        zsum += p.Z_T;
        zsq += p.dz_sq;
        steps += static_cast<double>(r.grid.n_steps());
        if (p.boundary_events > 0) {
            ++s.boundary_paths;
            continue;
        }
        used_w.push_back(p.W_T);
    }
    s.used = used_w.size();
    const double live = static_cast<double>(s.paths - s.failed);
    s.cap_rate = live > 0.0 ? static_cast<double>(s.cap_events) / (live * static_cast<double>(r.grid.n_steps())) : 0.0;
    if (steps > 0.0) {
        s.dz_mean = zsum / steps;
        s.dz_var = zsq / steps - s.dz_mean * s.dz_mean;
    }
    auto W = moments(recs, [](const PathRecord& p) { return p.W_T; });
    s.mean_W = W.mean;
    s.se_W = W.se;
    auto U = moments(recs, [](const PathRecord& p) { return p.utility; });
    s.mean_U = U.mean;
    s.se_U = U.se;
    s.certainty_equivalent = used_w.empty() ? 0.0 : certainty_equivalent(used_w, gamma);
    auto PT = moments(recs, [](const PathRecord& p) { return p.P_T; });
    s.mean_PT = PT.mean;
    s.se_PT = PT.se;
    auto gap = moments(recs, [](const PathRecord& p) { return std::abs(p.P_T - p.V); });
    s.mean_gap = gap.mean;
    s.se_gap = gap.se;
    s.var_YT = moments(recs, [](const PathRecord& p) { return p.Y_T; }).var;
    auto wm = moments(recs, [](const PathRecord& p) { return p.WM; });
    s.mean_WM = wm.mean;
    s.se_WM = wm.se;
    auto wr = moments(recs, [](const PathRecord& p) { return p.WM_remark; });
    s.mean_WM_remark = wr.mean;
    s.se_WM_remark = wr.se;

    auto v = moments(recs, [](const PathRecord& p) { return p.V; }, false);
    auto z = moments(recs, [](const PathRecord& p) { return p.Z_T; }, false);
    double cov = 0.0, cnt = 0.0;
    for (const PathRecord& p : recs) {
        if (p.failed) continue;
        cov += (p.V - v.mean) * (p.Z_T - z.mean);
        cnt += 1.0;
    }
    if (cnt > 1.0 && v.var > 0.0 && z.var > 0.0) s.corr_V_Z = cov / (cnt - 1.0) / std::sqrt(v.var * z.var);
    return s;
}

SimulationResult simulate(const Scenario& sc, const SimOptions& opt) { return run_all(sc, opt, true); }

SimulationResult simulate_serial(const Scenario& sc, const SimOptions& opt) { return run_all(sc, opt, false); }

std::vector<TrajectoryRow> replay(const Scenario& sc, std::size_t index) {
    if (index >= sc.mc.paths) throw std::out_of_range("replay index out of range");
    sc.validate();
    const Engine e(sc, sc.grid());
    std::vector<TrajectoryRow> rows;
    rows.reserve(e.grid.size());
    PathRecord rec;
    PathSinks sink;
    sink.trace = &rows;
    std::string err;
    run_path(e, index, rec, sink, &err);
    if (rec.failed) throw SimulationAborted("replayed path " + std::to_string(index) + " failed: " + err);
    return rows;
}

}  // namespace kylesim
