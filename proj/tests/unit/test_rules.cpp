#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "kylesim/rules.hpp"

using namespace kylesim;

namespace {

std::vector<RuleSpec> equilibrium_rules() {
    return {bachelier_rule(0.0, 1.0, 1.0, 1.0), black_scholes_rule(1.0, 0.3, 1.0, 1.0),
            kimura_rule(0.5, 1.0, -1.0, 1.0, 1.0), det_lambda_rule(0.0, 1.0, -1.0, 1.0, 1.0)};
}

}  // namespace

TEST(Rules, AnalyticResidualsVanish) {
    for (const RuleSpec& r : equilibrium_rules()) {
        const RuleGrid g = default_rule_grid(r, 21, 41);
        EXPECT_LT(check_H_equation(r, g), 1e-12) << to_string(r.kind);
        EXPECT_LT(check_lambda_equation(r, g), 1e-12) << to_string(r.kind);
    }
}

TEST(Rules, KimuraNeedsGammaEqualMinusC) {
    for (double C : {0.5, 1.0, 2.0}) {
        const RuleGrid g = default_rule_grid(kimura_rule(0.5, C, -C, 1.0, 1.0), 11, 21);
        EXPECT_LT(check_lambda_equation(kimura_rule(0.5, C, -C, 1.0, 1.0), g), 1e-12);
        EXPECT_GT(check_lambda_equation(kimura_rule(0.5, C, 0.0, 1.0, 1.0), g), 1e-3);
        EXPECT_GT(check_lambda_equation(kimura_rule(0.5, C, -0.5 * C, 1.0, 1.0), g), 1e-3);
    }
}

TEST(Rules, DetLambdaOdeMatchesClosedForm) {
    const TimeGrid grid(1.0, 1000);
    const NoiseVol s(1.0);
    const auto l = solve_lambda_ode(1.0, -1.0, s, grid);
    for (std::size_t k = 0; k <= 1000; ++k)
        ASSERT_NEAR(l[k], det_lambda_closed(1.0, -1.0, grid.time(k)), 1e-8);
    EXPECT_DOUBLE_EQ(det_lambda_closed(1.0, -1.0, 1.0), 0.5);
}

TEST(Rules, DetLambdaPiecewiseSigma) {
    const NoiseVol s(std::vector<double>{1.0, 2.0}, 1.0);
    const TimeGrid grid(1.0, 2000);
    const auto l = solve_lambda_ode(0.5, -0.7, s, grid);
    EXPECT_NEAR(l.back(), det_lambda_closed(0.5, -0.7, s.integrated(0.0, 1.0)), 1e-8);
}

TEST(Rules, BachelierStepIsLinear) {
    const RuleSpec r = bachelier_rule(2.0, 0.5, 1.0, 1.0);
    RuleState s = initial_state(r);
    EXPECT_EQ(s.p, 2.0);
    s = price_step(r, s, 0.4, 0.01);
    EXPECT_DOUBLE_EQ(s.p, 2.2);
    EXPECT_EQ(s.k, 1u);
    EXPECT_DOUBLE_EQ(s.t, 0.01);
}

TEST(Rules, BlackScholesLogEulerStaysPositive) {
    const RuleSpec r = black_scholes_rule(1.0, 0.8, 1.0, 1.0);
    prop::for_all(31, 50, [&](prop::Gen& g) {
        RuleState s = initial_state(r);
        for (int k = 0; k < 100; ++k) {
            s = price_step(r, s, g.normal(0.3), 0.01);
            ASSERT_GT(s.p, 0.0);
        }
    });
}

TEST(Rules, BlackScholesIsExactOnTheLogScale) {
    const RuleSpec r = black_scholes_rule(1.5, 0.4, 1.0, 1.0);
    prop::for_all(32, 20, [&](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 100));
        const auto traj = run_rule(r, y);
        const double exact = 1.5 * std::exp(0.4 * y[100] - 0.5 * 0.16 * 1.0);
        ASSERT_NEAR(traj.back().p, exact, 1e-12 * exact);
    });
}

TEST(Rules, KimuraClipsAndFlags) {
    const RuleSpec r = kimura_rule(0.5, 1.0, -1.0, 1.0, 1.0);
    RuleState s = initial_state(r);
    s = price_step(r, s, 100.0, 0.01);
    EXPECT_TRUE(s.clipped);
    EXPECT_TRUE(s.boundary);
    EXPECT_LE(s.p, 1.0 - r.clip_eps);
    s = price_step(r, s, 0.0, 0.01);
    EXPECT_FALSE(s.clipped);
    EXPECT_TRUE(s.boundary);
}

TEST(Rules, SdeCrossCheckTracksPrice) {
    const RuleSpec r = kimura_rule(0.4, 1.0, -1.0, 1.0, 1.0);
    const PathBundle b = brownian_bundle(TimeGrid(1.0, 4096), 10, 1.0, 3);
    for (const SamplePath& y : b.paths) {
        const auto traj = run_rule(r, y);
        EXPECT_NEAR(traj.back().p, traj.back().p_sde, 5e-3);
    }
}

TEST(Rules, TerminalDemandInvertsTheRule) {
    const RuleSpec b = bachelier_rule(1.0, 2.0, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(terminal_demand(b, 3.0), 1.0);
    const RuleSpec bs = black_scholes_rule(1.0, 0.3, 1.0, 2.0);
    const double y = terminal_demand(bs, 1.7);
    EXPECT_NEAR(1.0 * std::exp(0.3 * y - 0.5 * 0.09 * 2.0), 1.7, 1e-12);
    EXPECT_THROW(terminal_demand(kimura_rule(0.5, 1.0, -1.0, 1.0, 1.0), 0.5), std::invalid_argument);
}

TEST(Rules, Validation) {
    EXPECT_THROW(bachelier_rule(0.0, -1.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(black_scholes_rule(-1.0, 1.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(kimura_rule(1.5, 1.0, -1.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(det_lambda_rule(0.0, 1.0, 0.5, 1.0, 1.0), std::invalid_argument);
}

TEST(Rules, NumericPathDerivativeResiduals) {
    for (const RuleSpec& r : equilibrium_rules()) {
        const PathBundle b = brownian_bundle(TimeGrid(1.0, 4096), 10, 1.0, 41);
        const EquilibriumResiduals e = check_equilibrium_conditions(r, b, {}, 64);
        EXPECT_LT(e.h_residual, 1e-3) << to_string(r.kind);
        EXPECT_LT(e.commutator_residual, 1e-3) << to_string(r.kind);
        EXPECT_LT(e.kv_relative, 0.01) << to_string(r.kind);
        EXPECT_GT(e.min_gradient, 0.0) << to_string(r.kind);
        EXPECT_GT(e.nodes, 0u);
    }
}

TEST(Rules, NumericCommutatorDetectsWrongGamma) {
    const RuleSpec r = kimura_rule(0.5, 1.0, 0.0, 1.0, 1.0);
    const PathBundle b = brownian_bundle(TimeGrid(1.0, 4096), 10, 1.0, 42);
    EXPECT_GT(check_equilibrium_conditions(r, b, {}, 64).commutator_residual, 1e-2);
}

TEST(Rules, NumericMatchesAnalyticDerivatives) {
    for (const RuleSpec& r : equilibrium_rules()) {
        const PathBundle b = brownian_bundle(TimeGrid(1.0, 1024), 3, 1.0, 43);
        RuleFunctional F(r);
        DerivativeConfig numeric;
        numeric.prefer_analytic = false;
        for (const SamplePath& y : b.paths)
            for (std::size_t k : {1u, 300u, 700u, 1000u}) {
                const StoppedView v(y, k);
                ASSERT_NEAR(vertical_derivative(F, y, k, numeric), *F.analytic_vertical(v),
                            1e-7 * std::max(1.0, std::abs(*F.analytic_vertical(v))))
                    << to_string(r.kind);
                ASSERT_NEAR(horizontal_derivative(F, y, k, numeric), *F.analytic_horizontal(v), 1e-3)
                    << to_string(r.kind);
            }
    }
}

TEST(Rules, TwoHistoriesShareTheGradient) {
    for (const RuleSpec& r : equilibrium_rules()) {
        const TwoHistoryResult t = two_history_check(r, TimeGrid(1.0, 1024), 512, 5);
        EXPECT_NEAR(t.price_a, t.price_b, 1e-12 * std::max(1.0, std::abs(t.price_a))) << to_string(r.kind);
        EXPECT_LT(t.relative_gap, 1e-6) << to_string(r.kind);
    }
}
