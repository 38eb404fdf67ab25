#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "kylesim/market.hpp"
#include "kylesim/scenario_io.hpp"

using namespace kylesim;

namespace {

Scenario make(const std::string& model, const std::string& fundamental, const std::string& insider,
              std::size_t paths, std::size_t steps, std::uint64_t seed) {
    return parse_scenario("[model]\n" + model + "\n[fundamental]\n" + fundamental + "\n[insider]\n" + insider +
                          "\n[mc]\npaths = " + std::to_string(paths) + "\nsteps = " + std::to_string(steps) +
                          "\nseed = " + std::to_string(seed) + "\n");
}

Scenario bachelier(std::size_t paths, std::size_t steps, std::uint64_t seed) {
    return make("rule = \"bachelier\"\nP0 = 0\nlambda = 1", "law = \"normal\"\nmean = 0\nvar = 1",
                "strategy = \"gaussian_bridge\"", paths, steps, seed);
}

bool same_bytes(const SimulationResult& a, const SimulationResult& b) {
    if (a.records.size() != b.records.size() || a.checkpoint_prices != b.checkpoint_prices ||
        a.increments.size() != b.increments.size())
        return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const PathRecord &x = a.records[i], &y = b.records[i];
        const double xs[] = {x.V, x.Y_T, x.P_T, x.Z_T, x.W_T, x.utility, x.WM, x.WM_remark, x.qv, x.dz_sq};
        const double ys[] = {y.V, y.Y_T, y.P_T, y.Z_T, y.W_T, y.utility, y.WM, y.WM_remark, y.qv, y.dz_sq};
        if (std::memcmp(xs, ys, sizeof xs) != 0 || x.cap_events != y.cap_events || x.failed != y.failed)
            return false;
    }
    return std::memcmp(a.increments.data(), b.increments.data(), a.increments.size() * sizeof(double)) == 0 &&
           summary_json(a) == summary_json(b);
}

}  // namespace

TEST(Market, DeterministicForAFixedSeed) {
    const Scenario sc = bachelier(500, 100, 9);
    SimOptions opt;
    opt.collect_increments = true;
    EXPECT_TRUE(same_bytes(simulate(sc, opt), simulate(sc, opt)));
    Scenario other = sc;
    other.mc.seed = 10;
    EXPECT_NE(simulate(sc).records[0].W_T, simulate(other).records[0].W_T);
}

TEST(Market, ParallelMatchesSerialForAnyWorkerCount) {
    const Scenario sc = make("rule = \"kimura\"\nP0 = 0.4\nC = 1\ngamma = -1", "law = \"matched\"",
                             "strategy = \"kimura_bridge\"", 700, 80, 11);
    SimOptions opt;
    opt.collect_increments = true;
    const SimulationResult ref = simulate_serial(sc, opt);
    for (int t : {1, 2, 3, 8}) {
        opt.threads = t;
        EXPECT_TRUE(same_bytes(ref, simulate(sc, opt))) << t << " threads";
    }
}

TEST(Market, ReplayReproducesTheRecord) {
    const Scenario sc = bachelier(50, 200, 12);
    const SimulationResult r = simulate(sc);
    for (std::size_t i : {0u, 17u, 49u}) {
        const auto rows = replay(sc, i);
        ASSERT_EQ(rows.size(), 201u);
        EXPECT_EQ(rows.back().W, r.records[i].W_T);
        EXPECT_EQ(rows.back().P, r.records[i].P_T);
        EXPECT_EQ(rows.back().Y, r.records[i].Y_T);
        EXPECT_EQ(rows.back().Z, r.records[i].Z_T);
        EXPECT_DOUBLE_EQ(rows.back().t, 1.0);
    }
    EXPECT_THROW(replay(sc, 50), std::out_of_range);
}

TEST(Market, NoInsiderPriceIsAMartingale) {
    const Scenario sc = make("rule = \"bachelier\"\nP0 = 0.3\nlambda = 0.5", "law = \"normal\"\nmean = 0\nvar = 1",
                             "strategy = \"none\"", 50000, 50, 13);
    const Summary s = simulate(sc).summary;
    EXPECT_LT(std::abs(s.mean_PT - 0.3), 3.0 * s.se_PT);
    EXPECT_NEAR(s.var_YT, 1.0, 0.02);
    EXPECT_EQ(s.mean_W, 0.0);
    EXPECT_LT(std::abs(s.corr_V_Z), 0.02);
}

TEST(Market, NoiseMomentsMatchTheModel) {
    const Scenario sc = bachelier(20000, 50, 14);
    const Summary s = simulate(sc).summary;
    const double dt = 1.0 / 50.0;
    EXPECT_LT(std::abs(s.dz_mean), 3.0 * std::sqrt(dt / (50.0 * 20000.0)));
    EXPECT_NEAR(s.dz_var / dt, 1.0, 0.01);
}

TEST(Market, PointTargetAtThePriceEarnsTheOracleValue) {
    // V = P0: the bridge still trades against the noise, so W matches the
    // oracle 1/2 lambda sigma^2 T rather than 0
    const Scenario sc = make("rule = \"bachelier\"\nP0 = 0\nlambda = 1", "law = \"point\"\nvalue = 0",
                             "strategy = \"gaussian_bridge\"", 20000, 200, 15);
    const SimulationResult r = simulate(sc);
    EXPECT_LT(std::abs(r.summary.mean_W - 0.5), 3.0 * r.summary.se_W + 0.01);
    EXPECT_LT(r.summary.mean_gap, 0.1);
}

TEST(Market, BridgeHitsTheTarget) {
    const SimulationResult r = simulate(bachelier(2000, 400, 16));
    EXPECT_LT(r.summary.mean_gap, 0.05);
    EXPECT_EQ(r.summary.failed, 0u);
    EXPECT_EQ(r.summary.cap_events, 0u);
    EXPECT_NEAR(r.summary.mean_W, 1.0, 3.0 * r.summary.se_W + 0.02);
}

TEST(Market, AccountingIdentityHoldsPathwise) {
    // W + W^M + sum (V - P_k+1) dZ = 0 with left-point market-maker sums
    const SimulationResult r = simulate(bachelier(200, 100, 17));
    for (const PathRecord& p : r.records) EXPECT_TRUE(std::isfinite(p.WM));
    EXPECT_LT(std::abs(r.summary.mean_WM), 3.0 * r.summary.se_WM + 0.02);
}

TEST(Market, CheckpointsAreRecorded) {
    const SimulationResult r = simulate(bachelier(10, 100, 18));
    ASSERT_EQ(r.checkpoint_nodes, (std::vector<std::size_t>{25, 50, 75}));
    const auto rows = replay(bachelier(10, 100, 18), 3);
    EXPECT_EQ(r.checkpoint_prices[3 * 3 + 1], rows[50].P);
}

TEST(Market, AbortsWhenTooManyPathsFail) {
    // Euler steps of a large-lambda Black-Scholes rule leave the positive half
    // line and the lognormal bridge throws on most paths
    Scenario sc = make("rule = \"black_scholes\"\nP0 = 1\nlambda = 4\nscheme = \"euler\"",
                       "law = \"matched\"", "strategy = \"diffusion_density_bridge\"", 400, 10, 19);
    EXPECT_THROW(simulate(sc), SimulationAborted);
    SimOptions lax;
    lax.fail_rate_max = 1.0;
    const SimulationResult r = simulate(sc, lax);
    EXPECT_GT(r.summary.failed, 4u);
    EXPECT_EQ(r.summary.used + r.summary.failed + r.summary.boundary_paths, r.summary.paths);
}

TEST(Market, ThreadResolution) {
    EXPECT_EQ(resolve_threads(3), 3);
    EXPECT_GE(resolve_threads(0), 1);
}
