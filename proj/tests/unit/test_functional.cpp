#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "kylesim/functional.hpp"

using namespace kylesim;

namespace {

const DerivativeConfig kNumeric = [] {
    DerivativeConfig c;
    c.prefer_analytic = false;
    return c;
}();

SamplePath path_with_value(std::size_t n, std::size_t k, double v, std::uint64_t seed = 5) {
    prop::Gen g(seed);
    std::vector<double> vals = g.walk(TimeGrid(1.0, n)).values();
    const double shift = v - vals[k];
    for (double& x : vals) x += shift;
    return SamplePath(TimeGrid(1.0, n), std::move(vals));
}

double rms(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

TEST(StoppedView, RejectsReadsPastStop) {
    const SamplePath y(TimeGrid(1.0, 4));
    const StoppedView v(y, 2);
    EXPECT_NO_THROW(v[2]);
    EXPECT_THROW(v[3], std::out_of_range);
}

TEST(Vertical, SquareAtThree) {
    const StateFunctional f([](double, double y) { return y * y; });
    const SamplePath y = path_with_value(64, 10, 3.0);
    EXPECT_NEAR(vertical_derivative(f, y, 10, kNumeric), 6.0, 6e-6);
}

TEST(Vertical, TimeIntegralIsExactlyZero) {
    const TimeIntegralFunctional f([](double y) { return std::sin(y) + y * y; });
    prop::for_all(3, 20, [&](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 128));
        const std::size_t k = g.index(0, 128);
        ASSERT_EQ(vertical_derivative(f, y, k, kNumeric), 0.0);
    });
}

TEST(Vertical, ItoIntegralGivesIntegrand) {
    const ItoIntegralFunctional f([](double, double w) { return w; }, [](double, double) { return 1.0; });
    prop::for_all(4, 20, [&](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 256));
        const std::size_t k = g.index(1, 255);
        const double w = y[k];
        ASSERT_NEAR(vertical_derivative(f, y, k, kNumeric), w, 0.02 * std::max(1.0, std::abs(w)));
    });
}

TEST(VerticalSecond, Examples) {
    const SamplePath y = path_with_value(64, 20, 0.0);
    const StateFunctional sq([](double, double v) { return v * v; });
    const StateFunctional id([](double, double v) { return v; });
    const StateFunctional ex([](double, double v) { return std::exp(v); });
    EXPECT_NEAR(vertical_second(sq, y, 20, kNumeric), 2.0, 1e-6);
    EXPECT_NEAR(vertical_second(id, y, 20, kNumeric), 0.0, 1e-6);
    EXPECT_NEAR(vertical_second(ex, y, 20, kNumeric), 1.0, 1e-4);
}

TEST(Horizontal, StateFunctionalIsExactlyZero) {
    const StateFunctional f([](double, double y) { return y * y * y; });
    prop::for_all(6, 20, [&](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 100));
        ASSERT_EQ(horizontal_derivative(f, y, g.index(0, 99), kNumeric), 0.0);
    });
}

TEST(Horizontal, TimeIntegralGivesIntegrand) {
    const TimeIntegralFunctional f([](double y) { return y; });
    const TimeGrid grid(1.0, 200);
    prop::for_all(7, 20, [&](prop::Gen& g) {
        const SamplePath y = g.walk(grid);
        const std::size_t k = g.index(0, 199);
        ASSERT_NEAR(horizontal_derivative(f, y, k, kNumeric), y[k], grid.dt());
    });
}

TEST(Horizontal, TimePartial) {
    const StateFunctional f([](double t, double y) { return t * y; });
    const SamplePath y = path_with_value(50, 17, 1.3);
    EXPECT_NEAR(horizontal_derivative(f, y, 17, kNumeric), 1.3, 1e-12);
}

TEST(Horizontal, NoRoomAtHorizon) {
    const StateFunctional f([](double, double y) { return y; });
    const SamplePath y(TimeGrid(1.0, 10));
    try {
        horizontal_derivative(f, y, 10, kNumeric);
        FAIL() << "expected an error";
    } catch (const std::out_of_range& e) {
        EXPECT_STREQ(e.what(), "no horizontal room");
    }
}

TEST(Commutator, IdentityIsZero) {
    const StateFunctional f([](double, double y) { return y; });
    const SamplePath y = path_with_value(64, 30, 0.7);
    EXPECT_NEAR(commutator(f, y, 30, kNumeric).value, 0.0, 1e-6);
}

TEST(Commutator, ItoIntegralOfSquare) {
    const ItoIntegralFunctional f([](double, double w) { return w * w; }, [](double, double w) { return 2.0 * w; });
    prop::for_all(8, 20, [&](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 512));
        ASSERT_NEAR(commutator(f, y, g.index(1, 500), kNumeric).value, 1.0, 0.05);
    });
}

TEST(Commutator, ExponentialMartingaleIsZero) {
    const double lam = 1.0, sigma = 1.0;
    const StateFunctional f([=](double t, double y) { return std::exp(lam * y - 0.5 * lam * lam * sigma * sigma * t); });
    prop::for_all(9, 20, [&](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 1024), sigma);
        ASSERT_NEAR(commutator(f, y, g.index(1, 1000), kNumeric).value, 0.0, 1e-4);
    });
}

TEST(Commutator, IntegrandFrozenConventionLosesTheCorrection) {
    // with the integrand frozen on the extension the horizontal derivative vanishes
    const ItoIntegralFunctional f([](double, double w) { return w * w; }, [](double, double w) { return 2.0 * w; }, 1.0,
                                  ExtensionConvention::integrand_frozen);
    const SamplePath y = path_with_value(256, 100, 0.8);
    EXPECT_NEAR(horizontal_derivative(f, y, 100, kNumeric), 0.0, 1e-12);
    const ItoIntegralFunctional g([](double, double w) { return w * w; }, [](double, double w) { return 2.0 * w; });
    EXPECT_NEAR(horizontal_derivative(g, y, 100, kNumeric), -0.8, 1e-9);
}

TEST(ItoResidual, LinearIsExactlyZero) {
    const StateFunctional f([](double, double y) { return y; });
    prop::for_all(10, 10, [&](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 128));
        // telescopes; what is left is round-off of the numeric differences
        ASSERT_NEAR(ito_residual(f, y, kNumeric), 0.0, 1e-10);
    });
}

TEST(ItoResidual, SquareWithRealizedQvIsZero) {
    const StateFunctional f([](double, double y) { return y * y; });
    prop::Gen g(12);
    const SamplePath y = g.walk(TimeGrid(1.0, 1024));
    EXPECT_NEAR(ito_residual(f, y, kNumeric, QvMeasure::realized), 0.0, 1e-8);
}

TEST(ItoResidual, SquareWithModelRateShrinksBySqrtTwo) {
    const StateFunctional f([](double, double y) { return y * y; });
    std::vector<double> level;
    for (std::size_t n : {1024u, 2048u, 4096u}) {
        const PathBundle b = brownian_bundle(TimeGrid(1.0, n), 100, 1.0, 21);
        std::vector<double> r;
        for (const SamplePath& y : b.paths) r.push_back(ito_residual(f, y, kNumeric, QvMeasure::model_rate));
        level.push_back(rms(r));
    }
    for (std::size_t i = 0; i + 1 < level.size(); ++i) {
        const double ratio = level[i] / level[i + 1];
        EXPECT_GT(ratio, std::sqrt(2.0) * 0.8) << "level " << i;
        EXPECT_LT(ratio, std::sqrt(2.0) * 1.25) << "level " << i;
    }
}

TEST(ItoResidual, ExponentialMartingaleSmall) {
    const double lam = 0.5;
    const StateFunctional f([=](double t, double y) { return std::exp(lam * y - 0.5 * lam * lam * t); });
    const PathBundle b = brownian_bundle(TimeGrid(1.0, 4096), 100, 1.0, 22);
    std::vector<double> r;
    for (const SamplePath& y : b.paths) r.push_back(ito_residual(f, y, kNumeric, QvMeasure::model_rate));
    EXPECT_LT(rms(r), 1e-2);
}

TEST(ItoResidual, RmsDecreasesWithRefinement) {
    const double lam = 0.5;
    const StateFunctional f([=](double t, double y) { return std::exp(lam * y - 0.5 * lam * lam * t); });
    double prev = INFINITY;
    for (std::size_t n : {512u, 1024u, 2048u, 4096u}) {
        const PathBundle b = brownian_bundle(TimeGrid(1.0, n), 100, 1.0, 23);
        std::vector<double> r;
        for (const SamplePath& y : b.paths) r.push_back(ito_residual(f, y, kNumeric, QvMeasure::model_rate));
        const double cur = rms(r);
        EXPECT_LT(cur, prev * 1.1) << "n = " << n;
        prev = cur;
    }
}

TEST(Properties, NonAnticipative) {
    const ItoIntegralFunctional ito([](double t, double w) { return std::cos(w) + t; },
                                    [](double, double w) { return -std::sin(w); });
    const TimeIntegralFunctional integral([](double y) { return y * y; });
    prop::for_all(13, 30, [&](prop::Gen& g) {
        const TimeGrid grid(1.0, 64);
        const SamplePath y = g.walk(grid);
        const std::size_t k = g.index(0, 63);
        std::vector<double> v = y.values();
        for (std::size_t j = k + 1; j < v.size(); ++j) v[j] = g.normal(10.0);
        const SamplePath z(grid, std::move(v));
        ASSERT_EQ(ito(y, k), ito(z, k));
        ASSERT_EQ(integral(y, k), integral(z, k));
        ASSERT_EQ(vertical_derivative(ito, y, k, kNumeric), vertical_derivative(ito, z, k, kNumeric));
    });
}

TEST(Properties, CentralDifferenceIsSecondOrder) {
    const StateFunctional f([](double, double y) { return std::exp(y); });
    const SamplePath y = path_with_value(16, 8, 0.3);
    const double exact = std::exp(0.3);
    DerivativeConfig c = kNumeric;
    c.h_v = 1e-2;
    const double e1 = std::abs(vertical_derivative(f, y, 8, c) - exact);
    c.h_v = 5e-3;
    const double e2 = std::abs(vertical_derivative(f, y, 8, c) - exact);
    EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(Properties, NodeShiftAgreesWithTerminalJumpForStateFunctionals) {
    const StateFunctional f([](double t, double y) { return std::sin(y) * (1.0 + t); });
    DerivativeConfig shift = kNumeric;
    shift.bump = BumpMode::node_shift;
    prop::for_all(14, 20, [&](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 64));
        const std::size_t k = g.index(0, 64);
        ASSERT_NEAR(vertical_derivative(f, y, k, shift), vertical_derivative(f, y, k, kNumeric), 1e-12);
    });
}

TEST(IdentitySuite, AllPassOnSmallBundle) {
    for (const IdentityCheck& c : calculus_identities(10, 512, 3)) {
        EXPECT_TRUE(c.pass) << c.name << " error " << c.max_error;
        EXPECT_EQ(c.evaluations, 10u * 511u);
    }
}
