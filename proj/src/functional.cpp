#include "kylesim/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kylesim {

StoppedView::StoppedView(const SamplePath& path, std::size_t k) : path_(path), k_(k) {
    if (k >= path.size()) throw std::out_of_range("stop index out of range");
}

double StoppedView::operator[](std::size_t i) const {
    if (i > k_) throw std::out_of_range("non-anticipative read beyond the stop index");
    return path_[i];
}

double StoppedView::time(std::size_t i) const {
    if (i > k_) throw std::out_of_range("non-anticipative read beyond the stop index");
    return path_.time(i);
}

namespace {

double checked(double v) {
    if (!std::isfinite(v)) throw std::domain_error("non-finite functional value");
    return v;
}

double bump_size(double y, double base) { return base * std::max(1.0, std::abs(y)); }

// F at node k with a jump at t_k (realized per the bump mode) and an optional extension.
double eval_at(const PathFunctional& f, const SamplePath& path, std::size_t k, double jump,
               std::size_t ext, double post, const DerivativeConfig& cfg) {
    if (cfg.bump == BumpMode::node_shift && jump != 0.0) {
        const SamplePath bumped = vertical_bump(path, k, jump);
        return checked(f.evaluate(StoppedView(bumped, k), Surgery{0.0, ext, post}));
    }
    return checked(f.evaluate(StoppedView(path, k), Surgery{jump, ext, post}));
}

double first_difference(const PathFunctional& f, const SamplePath& path, std::size_t k,
                        double h, std::size_t ext, bool post, const DerivativeConfig& cfg,
                        Scheme scheme) {
    auto at = [&](double j) {
        return post ? eval_at(f, path, k, 0.0, ext, j, cfg) : eval_at(f, path, k, j, ext, 0.0, cfg);
    };
    if (scheme == Scheme::forward) return (at(h) - at(0.0)) / h;
    return (at(h) - at(-h)) / (2.0 * h);
}

void need_room(const SamplePath& path, std::size_t k, std::size_t m) {
    if (m == 0) throw std::invalid_argument("horizontal step count must be positive");
    if (k + m > path.grid().n_steps()) throw std::out_of_range("no horizontal room");
}

}  // namespace

double vertical_derivative(const PathFunctional& f, const SamplePath& path, std::size_t k,
                           const DerivativeConfig& cfg) {
    if (!(cfg.h_v > 0.0)) throw std::invalid_argument("vertical bump must be positive");
    if (cfg.prefer_analytic)
        if (auto a = f.analytic_vertical(StoppedView(path, k))) return *a;
    const double h = bump_size(path.at(k), cfg.h_v);
    return first_difference(f, path, k, h, 0, false, cfg, cfg.scheme);
}

double vertical_second(const PathFunctional& f, const SamplePath& path, std::size_t k,
                       const DerivativeConfig& cfg) {
    if (!(cfg.h_v > 0.0)) throw std::invalid_argument("vertical bump must be positive");
    if (cfg.prefer_analytic)
        if (auto a = f.analytic_vertical_second(StoppedView(path, k))) return *a;
    const double h = bump_size(path.at(k), cfg.h_v);
    const double up = eval_at(f, path, k, h, 0, 0.0, cfg);
    const double mid = eval_at(f, path, k, 0.0, 0, 0.0, cfg);
    const double dn = eval_at(f, path, k, -h, 0, 0.0, cfg);
    return (up - 2.0 * mid + dn) / (h * h);
}

double horizontal_derivative(const PathFunctional& f, const SamplePath& path, std::size_t k,
                             const DerivativeConfig& cfg) {
    const std::size_t m = cfg.horizontal_steps;
    need_room(path, k, m);
    if (cfg.prefer_analytic)
        if (auto a = f.analytic_horizontal(StoppedView(path, k))) return *a;
    const double ext = eval_at(f, path, k, 0.0, m, 0.0, cfg);
    const double here = eval_at(f, path, k, 0.0, 0, 0.0, cfg);
    return (ext - here) / (static_cast<double>(m) * path.grid().dt());
}

CommutatorResult commutator(const PathFunctional& f, const SamplePath& path, std::size_t k,
                            const DerivativeConfig& cfg) {
    const std::size_t m = cfg.horizontal_steps;
    need_room(path, k, m);
    const double delta = static_cast<double>(m) * path.grid().dt();
    const double h = bump_size(path.at(k), cfg.nested_scale * std::sqrt(cfg.h_v));

    // D(grad F): gradient after the extension minus gradient now
    const double grad_ext = first_difference(f, path, k, h, m, true, cfg, Scheme::central);
    const double grad_now = first_difference(f, path, k, h, 0, false, cfg, Scheme::central);
    const double d_grad = (grad_ext - grad_now) / delta;

    // grad(D F): horizontal derivative on bumped paths
    auto horiz = [&](double j) {
        return (eval_at(f, path, k, j, m, 0.0, cfg) - eval_at(f, path, k, j, 0, 0.0, cfg)) / delta;
    };
    const double grad_d = (horiz(h) - horiz(-h)) / (2.0 * h);

    CommutatorResult r;
    r.value = d_grad - grad_d;
    const double scale = std::abs(eval_at(f, path, k, 0.0, 0, 0.0, cfg));
    r.noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale) / (delta * h);
    r.noisy = cfg.tolerance > 0.0 && r.noise > cfg.tolerance;
    return r;
}

double ito_residual(const PathFunctional& f, const SamplePath& path, const DerivativeConfig& cfg,
                    QvMeasure qv, double qv_rate) {
    const std::size_t n = path.grid().n_steps();
    const double dt = path.grid().dt();
    DerivativeConfig one = cfg;
    one.horizontal_steps = 1;
    double r = checked(f(path, n)) - checked(f(path, 0));
    for (std::size_t k = 0; k < n; ++k) {
        const double dy = path[k + 1] - path[k];
        const double q = qv == QvMeasure::realized ? dy * dy : qv_rate * dt;
        r -= horizontal_derivative(f, path, k, one) * dt;
        r -= vertical_derivative(f, path, k, cfg) * dy;
        r -= 0.5 * vertical_second(f, path, k, cfg) * q;
    }
    return checked(r);
}

// ---- reference functionals ----

double StateFunctional::evaluate(const StoppedView& y, const Surgery& s) const {
    const double t = y.time() + static_cast<double>(s.extension) * y.grid().dt();
    return g_(t, y.current() + s.jump + s.post_jump);
}

double TimeIntegralFunctional::evaluate(const StoppedView& y, const Surgery& s) const {
    const std::size_t k = y.index();
    const double dt = y.grid().dt();
    if (cache_id_ != y.source_id()) {
        cache_id_ = y.source_id();
        prefix_.assign(1, 0.0);
    }
    while (prefix_.size() <= k) {
        const std::size_t i = prefix_.size() - 1;
        prefix_.push_back(prefix_.back() + h_(y[i]) * dt);
    }
    double v = prefix_[k];
    if (s.extension > 0) v += h_(y.current() + s.jump) * static_cast<double>(s.extension) * dt;
    return v;
}

ItoIntegralFunctional::ItoIntegralFunctional(std::function<double(double, double)> f,
                                             std::function<double(double, double)> df_dy,
                                             double qv_rate, ExtensionConvention conv)
    : f_(std::move(f)), df_dy_(std::move(df_dy)), qv_rate_(qv_rate), conv_(conv) {}

double ItoIntegralFunctional::across_jump(double t, double y, double h) const {
    if (h == 0.0) return 0.0;
    // Simpson across the jump
    return h / 6.0 * (f_(t, y) + 4.0 * f_(t, y + 0.5 * h) + f_(t, y + h));
}

double ItoIntegralFunctional::evaluate(const StoppedView& y, const Surgery& s) const {
    const std::size_t k = y.index();
    const double dt = y.grid().dt();
    if (cache_id_ != y.source_id()) {
        cache_id_ = y.source_id();
        prefix_.assign(1, 0.0);
    }
    while (prefix_.size() <= k) {
        const std::size_t i = prefix_.size() - 1;
        prefix_.push_back(prefix_.back() + f_(y.time(i), y[i]) * (y[i + 1] - y[i]));
    }
    const double t0 = y.time();
    const double w = y.current() + s.jump;
    double v = prefix_[k] + across_jump(t0, y.current(), s.jump);
    const double delta = static_cast<double>(s.extension) * dt;
    if (s.extension > 0 && conv_ == ExtensionConvention::qv_frozen) {
        const double mid = df_dy_(t0 + 0.5 * delta, w);
        v -= 0.5 * qv_rate_ * delta / 6.0 * (df_dy_(t0, w) + 4.0 * mid + df_dy_(t0 + delta, w));
    }
    v += across_jump(t0 + delta, w, s.post_jump);
    return v;
}

// ---- identity suite ----

std::vector<IdentityCheck> calculus_identities(std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                                               const DerivativeConfig& cfg_in) {
    DerivativeConfig cfg = cfg_in;
    cfg.prefer_analytic = false;
    const TimeGrid grid(1.0, n_steps);
    const PathBundle bundle = brownian_bundle(grid, n_paths, 1.0, seed);
    const double dt = grid.dt();

    const StateFunctional square([](double, double y) { return y * y; });
    const StateFunctional ty([](double t, double y) { return t * y; });
    const TimeIntegralFunctional integral([](double y) { return y; });
    const ItoIntegralFunctional ito_w([](double, double w) { return w; }, [](double, double) { return 1.0; });
    const ItoIntegralFunctional ito_w2([](double, double w) { return w * w; }, [](double, double w) { return 2.0 * w; });

    using Probe = std::function<double(const SamplePath&, std::size_t)>;
    using Exact = std::function<double(const SamplePath&, std::size_t)>;
    struct Identity {
        const char* name;
        double tol;
        Probe numeric;
        Exact exact;
    };
    auto y_at = [](const SamplePath& y, std::size_t k) { return y[k]; };
    auto zero = [](const SamplePath&, std::size_t) { return 0.0; };
    const std::vector<Identity> ids = {
        {"horizontal_state_zero", 1e-12, [&](const SamplePath& y, std::size_t k) { return horizontal_derivative(square, y, k, cfg); }, zero},
        {"horizontal_time_partial", 1e-9, [&](const SamplePath& y, std::size_t k) { return horizontal_derivative(ty, y, k, cfg); }, y_at},
        {"horizontal_time_integral", dt, [&](const SamplePath& y, std::size_t k) { return horizontal_derivative(integral, y, k, cfg); }, y_at},
        {"vertical_state_derivative", 1e-6, [&](const SamplePath& y, std::size_t k) { return vertical_derivative(square, y, k, cfg); },
         [](const SamplePath& y, std::size_t k) { return 2.0 * y[k]; }},
        {"vertical_time_integral_zero", 1e-12, [&](const SamplePath& y, std::size_t k) { return vertical_derivative(integral, y, k, cfg); }, zero},
        {"vertical_ito_integral", 0.02, [&](const SamplePath& y, std::size_t k) { return vertical_derivative(ito_w, y, k, cfg); }, y_at},
        {"commutator_ito_integral", 0.05, [&](const SamplePath& y, std::size_t k) { return commutator(ito_w2, y, k, cfg).value; },
         [](const SamplePath&, std::size_t) { return 1.0; }},
    };

    std::vector<IdentityCheck> out;
    for (const Identity& id : ids) {
        IdentityCheck c{id.name, 0.0, id.tol, 0, false};
        for (const SamplePath& y : bundle.paths)
            for (std::size_t k = 1; k < n_steps; ++k) {
                const double ex = id.exact(y, k);
                const double err = std::abs(id.numeric(y, k) - ex) / std::max(1.0, std::abs(ex));
                c.max_error = std::max(c.max_error, err);
                ++c.evaluations;
            }
        c.pass = c.max_error <= c.tolerance;
        out.push_back(c);
    }
    return out;
}

}  // namespace kylesim

