#include "kylesim/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace kylesim {

const char* to_string(VLawKind k) {
    switch (k) {
        case VLawKind::normal: return "normal";
        case VLawKind::lognormal: return "lognormal";
        case VLawKind::kimura_terminal: return "kimura_terminal";
        case VLawKind::point: return "point";
    }
    return "unknown";
}

double VLaw::sample(NormalStream& rng) const {
    switch (kind) {
        case VLawKind::normal: return mean + std::sqrt(var) * rng.normal();
        case VLawKind::lognormal: return std::exp(mean + std::sqrt(var) * rng.normal());
        case VLawKind::kimura_terminal: {
            // logit P_T is a two-component Gaussian mixture with weights (p0, 1 - p0)
            const double u = rng.uniform();
            const double z = rng.normal();
            const double shift = u < p0 ? 0.5 * var : -0.5 * var;
            return sigmoid(logit(p0) + shift + std::sqrt(var) * z);
        }
        case VLawKind::point: return value;
    }
    throw std::logic_error("unknown V law");
}

double VLaw::sd() const {
    switch (kind) {
        case VLawKind::normal: return std::sqrt(var);
        case VLawKind::lognormal: {
            const double m = std::exp(mean + 0.5 * var);
            return m * std::sqrt(std::expm1(var));
        }
        case VLawKind::kimura_terminal: {
            // variance of a martingale started at p0: p0(1-p0) - E[P(1-P)]; by quadrature in logit space
            const int n = 4000;
            const double s = std::sqrt(var), u0 = logit(p0);
            double m2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double z = -8.0 + 16.0 * (i + 0.5) / n;
                const double w = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI) * 16.0 / n;
                const double a = sigmoid(u0 + 0.5 * var + s * z), b = sigmoid(u0 - 0.5 * var + s * z);
                m2 += w * (p0 * a * a + (1.0 - p0) * b * b);
            }
            return std::sqrt(std::max(0.0, m2 - p0 * p0));
        }
        case VLawKind::point: return 0.0;
    }
    return 0.0;
}

void VLaw::validate() const {
    if (kind != VLawKind::point && !(var > 0.0)) throw std::invalid_argument("V law variance must be positive");
    if (kind == VLawKind::kimura_terminal && !(p0 > 0.0 && p0 < 1.0))
        throw std::invalid_argument("kimura_terminal p0 must lie in (0,1)");
    if (!std::isfinite(mean) || !std::isfinite(value)) throw std::invalid_argument("V law parameters must be finite");
}

VLaw matched_vlaw(const RuleSpec& rule) {
    const double iv = rule.sigma.integrated(0.0, rule.horizon);
    VLaw v;
    switch (rule.kind) {
        case RuleKind::bachelier:
            v.kind = VLawKind::normal;
            v.mean = rule.p0;
            v.var = rule.lambda0 * rule.lambda0 * iv;
            break;
        case RuleKind::det_lambda: {
            // int_0^T lambda(t)^2 sigma^2 dt = (lambda(T) - lambda0) / gamma, or lambda0^2 * iv at gamma = 0
            v.kind = VLawKind::normal;
            v.mean = rule.p0;
            if (rule.gamma == 0.0) {
                v.var = rule.lambda0 * rule.lambda0 * iv;
            } else {
                const double lT = det_lambda_closed(rule.lambda0, rule.gamma, iv);
                v.var = (lT - rule.lambda0) / rule.gamma;
            }
            break;
        }
        case RuleKind::black_scholes: {
            const double s2 = rule.lambda0 * rule.lambda0 * iv;
            v.kind = VLawKind::lognormal;
            v.mean = std::log(rule.p0) - 0.5 * s2;
            v.var = s2;
            break;
        }
        case RuleKind::kimura:
            v.kind = VLawKind::kimura_terminal;
            v.p0 = rule.p0;
            v.var = rule.C * rule.C * iv;
            break;
        default: throw std::invalid_argument("no matched V law for a custom rule");
    }
    return v;
}

NoiseVol Scenario::sigma() const {
    if (model.sigma.size() == 1) return NoiseVol(model.sigma[0]);
    return NoiseVol(model.sigma, model.T);
}

RuleSpec Scenario::rule() const {
    RuleSpec r;
    switch (model.rule) {
        case RuleKind::bachelier: r = bachelier_rule(model.p0, model.lambda, sigma(), model.T); break;
        case RuleKind::black_scholes: r = black_scholes_rule(model.p0, model.lambda, sigma(), model.T); break;
        case RuleKind::det_lambda: r = det_lambda_rule(model.p0, model.lambda, model.gamma, sigma(), model.T); break;
        case RuleKind::kimura: r = kimura_rule(model.p0, model.C, model.gamma, sigma(), model.T); break;
        default: throw std::invalid_argument("scenario rule must be a shipped rule");
    }
    r.gamma = model.gamma;
    if (model.scheme) r.scheme = *model.scheme;
    r.eta_scheme = model.eta;
    return r;
}

TimeGrid Scenario::grid() const { return TimeGrid(model.T, mc.steps); }

std::vector<double> Scenario::checkpoint_times() const {
    if (!output.checkpoint_times.empty()) return output.checkpoint_times;
    return {0.25 * model.T, 0.5 * model.T, 0.75 * model.T};
}

std::size_t steps_for_dt(double T, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt level must be positive");
    const double r = T / dt;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r))
        throw std::invalid_argument("dt level does not divide the horizon T");
    return static_cast<std::size_t>(n);
}

void Scenario::validate() const {
    if (!(model.T > 0.0)) throw std::invalid_argument("T must be positive");
    if (model.gamma > 0.0) throw std::invalid_argument("gamma must be <= 0");
    if (model.scheme == PriceScheme::log_euler && model.rule != RuleKind::black_scholes)
        throw std::invalid_argument("log_euler scheme needs a positive xi (black_scholes)");
    if (mc.paths < 1) throw std::invalid_argument("paths must be at least 1");
    if (mc.steps < 1) throw std::invalid_argument("steps must be at least 1");
    for (double dt : mc.dt_levels) steps_for_dt(model.T, dt);
    for (double t : checkpoint_times())
        if (!(t > 0.0 && t < model.T)) throw std::invalid_argument("checkpoint times must lie in (0, T)");
    fundamental.validate();
    const RuleSpec r = rule();
    Strategy check(insider.strategy, r, grid());
    (void)check;
}

}  // namespace kylesim
