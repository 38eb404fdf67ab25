#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kylesim/market.hpp"
#include "kylesim/perturbation.hpp"
#include "kylesim/scenario.hpp"

namespace kylesim {

struct Check {
    std::string name;
    double statistic = 0.0;
    double se_or_pvalue = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct Block {
    std::string name;
    bool pass = false;
    std::vector<Check> checks;
    std::vector<std::string> notes;

    // pass = AND of checks; an empty block passes only if `empty_ok`
    void settle(bool empty_ok = false);
    const Check* find(const std::string& check) const;
};

extern const char* const kReportCaveat;

// ---- blocks ----

// analytic and numeric residuals of the rule's equilibrium conditions
Block test_pde(const Scenario& sc);
// KS and Ljung-Box on thinned standardized increments, realized QV ratio
Block test_brownian(const SimulationResult& r, const Scenario& sc);
// mean |P_T - V| per dt level and its log-log slope in dt
struct TerminalLevel {
    double dt = 0.0;
    double mean_gap = 0.0, se_gap = 0.0;
};
Block test_terminal(const std::vector<TerminalLevel>& levels, double scale, const VerifyConfig& cfg);
// regression of V on P_t at each checkpoint
Block test_competitive(const SimulationResult& r, const VerifyConfig& cfg);
Block test_market_maker(const SimulationResult& r, const VerifyConfig& cfg);
// realized wealth against the optimal value oracle, paired on V
Block test_value(const SimulationResult& r, const Scenario& sc);
Block test_optimality(const std::vector<PerturbationEstimate>& est, const VerifyConfig& cfg);
Block test_admissibility(const SimulationResult& r, const Scenario& sc);

// sd(V), or g(0, P0) sigma sqrt(T) for a point law
double terminal_gap_scale(const Scenario& sc);

struct LevelRun {
    double dt = 0.0;
    std::size_t steps = 0;
    Summary summary;
};

struct EquilibriumReport {
    std::string caveat = kReportCaveat;
    std::vector<LevelRun> levels;
    std::vector<Block> blocks;
    std::vector<PerturbationEstimate> perturbation;
    VerifyConfig thresholds;
    bool verdict = false;

    const Block* block(const std::string& name) const;
};

struct CertifyOptions {
    int threads = 0;
    bool with_value = true;
    bool with_optimality = true;
};

// Simulates every dt level; the finest carries increments, checkpoints and the
// perturbation harness. Block errors are recorded and fail the block.
EquilibriumReport certify(const Scenario& sc, const CertifyOptions& opt = {});

std::string report_json(const EquilibriumReport& rep);
std::string report_text(const EquilibriumReport& rep);

}  // namespace kylesim
