#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "kylesim/density.hpp"
#include "kylesim/path.hpp"
#include "kylesim/rules.hpp"

namespace kylesim {

// ---- drift formulas (rate units) ----

// Y-units: (y* - Y_t) / max(T - t, dt)
double drift_gaussian_bridge(double y_star, double y, double t, double T, double dt);
// W-units: G * d/dx log p(x -> target); throws when the density underflows
double drift_diffusion_density(double target, double x, double s2, const TransitionDensity& p,
                               double G);
// Y-units: lambda(t) (x - P_t) / tail, tail = int_t^T lambda^2
double drift_det_lambda(double target, double p, double lambda_t, double tail);
// W-units, Kimura price with volatility c P(1-P): c(1-2P)/2 + logit gap / (c tau)
double drift_kimura(double target, double p, double c, double tau);
// W-units, conditioning on first hitting level a at time u
double drift_first_passage(double a, double u, double w, double t, bool hit, double dt = 0.0);

// ---- strategies ----

enum class StrategyKind {
    none,
    gaussian_bridge,
    diffusion_density_bridge,
    det_lambda_bridge,
    kimura_bridge,
    first_passage,
    custom_table
};
const char* to_string(StrategyKind k);
StrategyKind strategy_kind_from_string(const std::string& s);

// theta(t, y) on a rectangular grid, bilinear with clamping
struct DriftTable {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> theta;  // row-major, t index outer

    double at(double tq, double yq) const;
    bool empty() const { return theta.empty(); }
    void validate() const;
    static DriftTable from_csv(const std::string& path);
    static DriftTable constant(double value, double T);
};

struct StrategySpec {
    StrategyKind kind = StrategyKind::none;
    double cap = 0.0;             // 0 selects 1e3 / T
    double target_offset = 0.0;   // Y-units, gaussian_bridge only
    double level = 0.0;           // first_passage level a (W-units)
    double hit_time = 0.5;        // first_passage target u
    DriftTable table;
};

// Per-node precomputation of a strategy against a rule and grid.
class Strategy {
public:
    Strategy(const StrategySpec& spec, const RuleSpec& rule, const TimeGrid& grid);

    struct Target {
        double v = 0.0;
        double y_star = 0.0;
    };
    Target prepare(double v) const;
    // uncapped demand rate theta (Y-units) at node k < n
    double rate(const Target& target, std::size_t k, double y, double p, bool hit) const;
    double cap() const { return cap_; }
    const StrategySpec& spec() const { return spec_; }
    // variance of the driving coordinate from t_k to T with the dt floor
    double bridge_variance(std::size_t k) const { return s2_[k]; }
    DensityKind density_kind() const { return density_; }

private:
    StrategySpec spec_;
    RuleSpec rule_;
    TimeGrid grid_;
    double cap_;
    DensityKind density_;
    std::vector<double> tau_;    // max(T - t_k, dt)
    std::vector<double> sig_;    // sigma_Z(t_k)
    std::vector<double> s2_;     // bridge variance
    std::vector<double> lam_;    // det_lambda level per node
};

DensityKind density_for_rule(const RuleSpec& rule);

// ---- wealth and utility ----

// trapezoid prices the insider's trade at the step average (V - (P_k + P_k+1)/2)
enum class WealthRule { trapezoid, left_point };
const char* to_string(WealthRule w);

struct WealthRecord {
    double W = 0.0;
    double utility = 0.0;
    double log_abs_utility = 0.0;  // log |U|; -inf when U = 0
    bool utility_overflow = false; // gamma W > 700
    double terminal_gap = 0.0;
    std::size_t cap_events = 0;
};

double utility(double W, double gamma);
double log_abs_utility(double W, double gamma);
WealthRecord wealth(double V, const std::vector<double>& prices, const std::vector<double>& theta,
                    const TimeGrid& grid, double gamma = 0.0, WealthRule rule = WealthRule::trapezoid);
// log(E exp(gamma W)) / gamma, evaluated with a shifted log-sum-exp
double certainty_equivalent(const std::vector<double>& W, double gamma);

// ---- value function ----

struct ValueFunctionSpec {
    std::function<double(double, double)> g;  // (t, z)
    double tolerance = 1e-12;
};
// int_v^y (z - v) / g(t, z) dz by adaptive Gauss-Kronrod
double value_function_I(double t, double y, double v, const ValueFunctionSpec& spec);
// I(0, P0, V) + 1/2 int_0^T g(t, V) sigma^2(t) dt: the optimal value as a function of V
double optimal_value_oracle(const RuleSpec& rule, double v, double tolerance = 1e-10);

}  // namespace kylesim
