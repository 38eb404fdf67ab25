#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kylesim/insider.hpp"
#include "kylesim/rng.hpp"
#include "kylesim/rules.hpp"

namespace kylesim {

enum class VLawKind { normal, lognormal, kimura_terminal, point };
const char* to_string(VLawKind k);

// Law of the fundamental value V.
//   normal: N(mean, var); lognormal: log V ~ N(mean, var);
//   kimura_terminal: time-T law of dP = c P(1-P) dW from p0, var = c^2 T;
//   point: V = value.
struct VLaw {
    VLawKind kind = VLawKind::normal;
    double mean = 0.0;
    double var = 1.0;
    double p0 = 0.5;
    double value = 0.0;

    double sample(NormalStream& rng) const;
    double sd() const;
    void validate() const;
};

// the law of P_T under the rule driven by Brownian Y
VLaw matched_vlaw(const RuleSpec& rule);

struct ModelConfig {
    RuleKind rule = RuleKind::bachelier;
    double p0 = 0.0;
    double lambda = 1.0;
    double C = 1.0;
    double gamma = 0.0;
    std::vector<double> sigma{1.0};  // one level, or equal slices of [0, T]
    double T = 1.0;
    std::optional<PriceScheme> scheme;  // unset: the rule's own default
    EtaScheme eta = EtaScheme::exact_exponential;
};

struct InsiderConfig {
    StrategySpec strategy;
    std::string table_path;
    WealthRule wealth_rule = WealthRule::trapezoid;
};

struct McConfig {
    std::size_t paths = 100000;
    std::size_t steps = 400;
    std::uint64_t seed = 1;
    std::vector<double> dt_levels{0.01, 0.005, 0.0025};
};

struct OutputConfig {
    std::string dir = "out";
    bool emit_paths = false;
    std::vector<double> checkpoint_times;  // empty: T/4, T/2, 3T/4
};

// pass thresholds of the certification blocks
struct VerifyConfig {
    std::size_t thin = 8;
    double ks_alpha = 0.01;
    double lb_alpha = 0.01;
    std::size_t lb_lags = 10;
    double qv_tol = 0.02;
    double slope_lo = 0.35;
    double slope_hi = 0.65;
    double gap_frac = 0.05;
    double se_mult = 3.0;
    double cap_rate_max = 1e-3;
    double fail_rate_max = 0.01;
    double epsilon = 1e-2;
    double pde_tol = 1e-3;
    std::size_t pde_paths = 10;
    std::size_t pde_steps = 4096;
    std::size_t pde_stride = 8;
    double kv_tol = 0.01;
    double two_history_tol = 1e-6;
    std::size_t bins = 10;
};

struct Scenario {
    ModelConfig model;
    VLaw fundamental;
    InsiderConfig insider;
    McConfig mc;
    OutputConfig output;
    VerifyConfig verify;

    NoiseVol sigma() const;
    RuleSpec rule() const;
    TimeGrid grid() const;
    std::vector<double> checkpoint_times() const;
    void validate() const;
};

// steps for a dt level; throws unless T / dt is an integer
std::size_t steps_for_dt(double T, double dt);

}  // namespace kylesim
