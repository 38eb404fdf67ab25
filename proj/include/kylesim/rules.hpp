#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kylesim/functional.hpp"
#include "kylesim/path.hpp"
#include "kylesim/volatility.hpp"

namespace kylesim {

// value and partials of a smooth function of (t, x)
struct Partials {
    double v = 0.0, d1 = 0.0, d2 = 0.0, d22 = 0.0;
};

enum class RuleKind { bachelier, black_scholes, det_lambda, kimura, custom };
// euler: xi += lambda dY; log_euler: Euler on log xi (positive xi only)
enum class PriceScheme { euler, log_euler };
enum class EtaScheme { exact_exponential, euler_factor };

const char* to_string(RuleKind k);
const char* to_string(PriceScheme s);
const char* to_string(EtaScheme s);

// P_t = H(t, xi_t), xi_t = xi_0 + int lambda(s, P_s) dY_s
struct RuleSpec {
    RuleKind kind = RuleKind::custom;
    std::function<Partials(double, double)> H;        // (t, x)
    std::function<Partials(double, double)> lambda;   // (t, p)
    std::function<double(double, double)> H_inverse; // (t, p) -> x; may be empty
    double p0 = 0.0;
    double xi0 = 0.0;
    NoiseVol sigma;
    double gamma = 0.0;
    double horizon = 1.0;
    double lambda0 = 0.0;  // bachelier / black_scholes / det_lambda level
    double C = 0.0;        // kimura
    bool unit_interval = false;
    double clip_eps = 1e-12;
    PriceScheme scheme = PriceScheme::euler;
    EtaScheme eta_scheme = EtaScheme::exact_exponential;

    // g(t, p) = dH/dx * lambda, the market depth as a function of the price
    double market_depth(double t, double p) const;
    void validate() const;
};

RuleSpec bachelier_rule(double p0, double lambda, NoiseVol sigma, double horizon);
RuleSpec black_scholes_rule(double p0, double lambda, NoiseVol sigma, double horizon);
RuleSpec det_lambda_rule(double p0, double lambda0, double gamma, NoiseVol sigma, double horizon);
RuleSpec kimura_rule(double p0, double C, double gamma, NoiseVol sigma, double horizon);

// lambda0 / (1 - lambda0 * gamma * int_0^t sigma^2)
double det_lambda_closed(double lambda0, double gamma, double integrated_variance);

struct RuleState {
    double t = 0.0;
    std::size_t k = 0;
    double xi = 0.0;
    double p = 0.0;
    double p_sde = 0.0;   // Euler on the price SDE, for cross-checking
    double eta = 1.0;     // stochastic exponential of int dH/dx dlambda/dp dY
    bool boundary = false;   // sticky: some step was clipped
    bool clipped = false;    // this step was clipped
    bool eta_nonpositive = false;
};

RuleState initial_state(const RuleSpec& spec);
RuleState price_step(const RuleSpec& spec, const RuleState& s, double dY, double dt);

// Y-level at which P_T = v, for rules where P_T is a function of Y_T.
double terminal_demand(const RuleSpec& spec, double v);

// ---- residual checkers ----
struct RuleGrid {
    std::vector<double> t;
    std::vector<double> x;
};
RuleGrid default_rule_grid(const RuleSpec& spec, std::size_t nt, std::size_t nx);
RuleGrid make_rule_grid(double t0, double t1, std::size_t nt, double x0, double x1, std::size_t nx);

double check_H_equation(const RuleSpec& spec, const RuleGrid& grid);
// risk-neutral equation when gamma == 0, exponential-utility equation otherwise
double check_lambda_equation(const RuleSpec& spec, const RuleGrid& grid);

std::vector<double> solve_lambda_ode(double lambda0, double gamma, const NoiseVol& sigma,
                                     const TimeGrid& grid);

// ---- trajectories and kernels ----
std::vector<RuleState> run_rule(const RuleSpec& spec, const SamplePath& y);

struct KernelFactors {
    std::vector<double> K1;
    std::vector<double> K2;
    bool eta_nonpositive = false;
};
KernelFactors kernel_factors(const RuleSpec& spec, const std::vector<RuleState>& traj);
KernelFactors kernel_factors(const RuleSpec& spec, const SamplePath& y);

// P_t as a path functional of Y: the discrete recursion up to t_k, then the
// continuous flows for jumps (d xi/dh = lambda) and flat extensions
// (d xi/ds = -a/2 * d2(lambda) * grad P, with the QV rate a frozen at t_k).
// Holds a prefix cache: one instance per thread.
class RuleFunctional : public PathFunctional {
public:
    explicit RuleFunctional(RuleSpec spec) : spec_(std::move(spec)) {}
    double evaluate(const StoppedView& y, const Surgery& s) const override;
    std::optional<double> analytic_vertical(const StoppedView& y) const override;
    std::optional<double> analytic_vertical_second(const StoppedView& y) const override;
    std::optional<double> analytic_horizontal(const StoppedView& y) const override;

    const RuleState& state_at(const StoppedView& y) const;
    const RuleSpec& spec() const { return spec_; }

private:
    double jump_flow(double t, double xi, double h) const;
    double extension_flow(double t, double xi, double delta, double a) const;

    RuleSpec spec_;
    mutable std::uint64_t cache_id_ = 0;
    mutable std::vector<RuleState> prefix_;
};

struct EquilibriumResiduals {
    double h_residual = 0.0;          // max |D P + 1/2 grad^2 P sigma^2|
    double commutator_residual = 0.0; // max |L P - gamma sigma^2 (grad P)^2|
    double min_gradient = 0.0;        // min numeric grad P over checked nodes
    double kv_relative = 0.0;         // max |K1 K2 - grad P| / grad P
    double commutator_noise = 0.0;
    std::size_t nodes = 0;
    std::size_t skipped_boundary = 0;
};
EquilibriumResiduals check_equilibrium_conditions(const RuleSpec& spec, const PathBundle& paths,
                                                  const DerivativeConfig& cfg = {},
                                                  std::size_t node_stride = 1);

struct TwoHistoryResult {
    double price_a = 0.0, price_b = 0.0;
    double grad_a = 0.0, grad_b = 0.0;
    double relative_gap = 0.0;
};
// grad P at node k for two different histories tuned to share (t_k, P_k)
TwoHistoryResult two_history_check(const RuleSpec& spec, const TimeGrid& grid, std::size_t k,
                                   std::uint64_t seed, const DerivativeConfig& cfg = {});

}  // namespace kylesim
