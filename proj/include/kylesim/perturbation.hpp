#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "kylesim/scenario.hpp"

namespace kylesim {

// State visible to a perturbation direction; read on the base path.
struct DirectionContext {
    double t = 0.0, T = 1.0, dt = 0.0;
    double P = 0.0, V = 0.0, Y = 0.0;
    double y_star = 0.0;
};

struct DirectionSpec {
    std::string name;
    std::function<double(const DirectionContext&)> beta;
};

DirectionSpec direction_zero();
DirectionSpec direction_one();
DirectionSpec direction_time();        // t / T
DirectionSpec direction_sign_gap();    // sign(V - P_t)
DirectionSpec direction_bridge();      // (y* - Y_t) / max(T - t, dt), needs a demand target
// {1, t/T, sign(V - P_t)}
std::vector<DirectionSpec> canonical_directions();

struct PerturbationEstimate {
    std::string name;
    double eps = 0.0;
    double J0 = 0.0;
    double dJ = 0.0, se = 0.0;                 // central difference at 0
    double curvature = 0.0, curvature_se = 0.0;
    std::size_t paths_used = 0;
};

// dX^eps = dX + eps beta dt on shared noise: the base rate is replayed open loop,
// every (direction, +-eps) variant steps in lockstep with the base path.
std::vector<PerturbationEstimate> perturb_and_evaluate(const Scenario& sc,
                                                       const std::vector<DirectionSpec>& dirs,
                                                       double eps, int threads = 0);

}  // namespace kylesim
