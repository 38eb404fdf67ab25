#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "kylesim/insider.hpp"
#include "kylesim/scenario.hpp"

namespace kylesim::detail {

// A scenario compiled against one grid; shared read-only by all workers.
struct Engine {
    Engine(const Scenario& s, const TimeGrid& g)
        : sc(s), rule(s.rule()), grid(g), strategy(s.insider.strategy, rule, g) {
        step_sd.resize(grid.n_steps());
        for (std::size_t k = 0; k < grid.n_steps(); ++k)
            step_sd[k] = std::sqrt(rule.sigma.integrated(grid.time(k), grid.time(k + 1)));
        sigma0 = rule.sigma(0.0);
    }

    const Scenario& sc;
    RuleSpec rule;
    TimeGrid grid;
    Strategy strategy;
    std::vector<double> step_sd;
    double sigma0 = 1.0;

    double capped(double theta, bool& hit_cap) const {
        const double c = strategy.cap();
        hit_cap = std::abs(theta) > c;
        return hit_cap ? std::copysign(c, theta) : theta;
    }
    bool crossed(double y_prev, double y_next) const {
        if (sc.insider.strategy.kind != StrategyKind::first_passage) return false;
        const double a = sc.insider.strategy.level;
        return (y_prev / sigma0 - a) * (y_next / sigma0 - a) <= 0.0;
    }
};

}  // namespace kylesim::detail
