#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kylesim/scenario.hpp"

namespace kylesim {

class SimulationAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimOptions {
    bool collect_increments = false;   // thinned standardized dY per path
    std::size_t thin = 8;
    bool collect_checkpoints = true;
    int threads = 0;                   // 0: KYLESIM_THREADS or the OpenMP default
    double fail_rate_max = 0.01;
};

struct PathRecord {
    double V = 0.0;
    double Y_T = 0.0;
    double P_T = 0.0;
    double Z_T = 0.0;
    double W_T = 0.0;
    double utility = 0.0;
    double log_abs_utility = 0.0;
    double WM = 0.0;          // counterparty accounting of the market makers
    double WM_remark = 0.0;   // -Y_T (V - P_T) - sum Y_k dP_k
    double qv = 0.0;          // realized sum dY^2
    double dz_sq = 0.0;       // sum dZ^2
    std::uint32_t cap_events = 0;
    std::uint32_t boundary_events = 0;
    bool failed = false;
    bool utility_overflow = false;
};

struct Summary {
    std::size_t paths = 0;
    std::size_t used = 0;            // not failed, no boundary event
    std::size_t failed = 0;
    std::size_t boundary_paths = 0;
    std::uint64_t cap_events = 0;
    double cap_rate = 0.0;           // cap events per (path, step)
    double mean_W = 0.0, se_W = 0.0;
    double mean_U = 0.0, se_U = 0.0;
    double certainty_equivalent = 0.0;
    double mean_PT = 0.0, se_PT = 0.0;
    double mean_gap = 0.0, se_gap = 0.0;
    double var_YT = 0.0;
    double mean_WM = 0.0, se_WM = 0.0;
    double mean_WM_remark = 0.0, se_WM_remark = 0.0;
    double dz_mean = 0.0, dz_var = 0.0;   // per-step noise moments over the ensemble
    double corr_V_Z = 0.0;
    std::size_t utility_overflows = 0;
};

struct SimulationResult {
    TimeGrid grid{1.0, 1};
    std::vector<PathRecord> records;
    std::vector<std::size_t> checkpoint_nodes;
    std::vector<double> checkpoint_prices;   // records.size() x checkpoint_nodes.size()
    std::size_t increments_per_path = 0;
    std::vector<double> increments;          // records.size() x increments_per_path
    Summary summary;
};

// OpenMP path-parallel; byte-identical to simulate_serial for any worker count.
SimulationResult simulate(const Scenario& sc, const SimOptions& opt = {});
// single-threaded reference
SimulationResult simulate_serial(const Scenario& sc, const SimOptions& opt = {});

Summary summarize(const SimulationResult& r, double gamma);

struct TrajectoryRow {
    double t = 0.0, Z = 0.0, Y = 0.0, P = 0.0, theta = 0.0, W = 0.0;
    bool capped = false;
    bool boundary = false;
};
std::vector<TrajectoryRow> replay(const Scenario& sc, std::size_t index);

int resolve_threads(int requested);

}  // namespace kylesim
