#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "kylesim/path.hpp"

using namespace kylesim;

TEST(TimeGrid, EndpointsExact) {
    const TimeGrid g(1.7, 13);
    EXPECT_EQ(g.time(0), 0.0);
    EXPECT_EQ(g.time(13), 1.7);
    EXPECT_EQ(g.size(), 14u);
    EXPECT_DOUBLE_EQ(g.dt(), 1.7 / 13);
}

TEST(TimeGrid, RejectsBadInput) {
    EXPECT_THROW(TimeGrid(0.0, 10), std::invalid_argument);
    EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
}

TEST(SamplePath, SizeMismatchThrows) {
    EXPECT_THROW(SamplePath(TimeGrid(1.0, 4), std::vector<double>(3)), std::invalid_argument);
}

TEST(SamplePath, StoppedIsFlatAfterStop) {
    prop::for_all(1, 50, [](prop::Gen& g) {
        const TimeGrid grid(1.0, 64);
        const SamplePath y = g.walk(grid);
        const std::size_t k = g.index(0, 64);
        const SamplePath s = stopped(y, k);
        for (std::size_t j = 0; j <= 64; ++j) ASSERT_EQ(s[j], j <= k ? y[j] : y[k]);
    });
}

TEST(SamplePath, BumpThenUnbumpIsExact) {
    prop::for_all(2, 50, [](prop::Gen& g) {
        const TimeGrid grid(1.0, 32);
        const SamplePath y = g.walk(grid);
        const std::size_t k = g.index(0, 32);
        const double h = g.uniform(-2.0, 2.0);
        const SamplePath back = vertical_bump(vertical_bump(y, k, h), k, -h);
        ASSERT_TRUE(back == stopped(y, k));
    });
}

TEST(SamplePath, BumpStopsThenShifts) {
    const TimeGrid grid(1.0, 8);
    const SamplePath y(grid, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8});
    const SamplePath b = vertical_bump(y, 3, 0.5);
    EXPECT_EQ(b[2], 2.0);
    EXPECT_EQ(b[3], 3.5);
    EXPECT_EQ(b[8], 3.5);
}

TEST(SamplePath, DefinitionExamples) {
    const TimeGrid g3(1.0, 3);
    const SamplePath y(g3, std::vector<double>{0, 1, 2, 3});
    EXPECT_EQ(stopped(y, 1).values(), (std::vector<double>{0, 1, 1, 1}));
    EXPECT_EQ(stopped(y, 3).values(), y.values());
    const SamplePath c(g3, 2.5);
    EXPECT_EQ(stopped(c, 1).values(), c.values());
    EXPECT_EQ(vertical_bump(SamplePath(g3, 0.0), 0, 1.0).values(), (std::vector<double>{1, 1, 1, 1}));
    EXPECT_EQ(vertical_bump(stopped(y, 1), 1, 0.5).values(), (std::vector<double>{0, 1.5, 1.5, 1.5}));
    EXPECT_TRUE(vertical_bump(y, 2, 0.0) == stopped(y, 2));
}

TEST(SamplePath, StoppedIsIdempotent) {
    prop::for_all(15, 30, [](prop::Gen& g) {
        const SamplePath y = g.walk(TimeGrid(1.0, 40));
        const std::size_t k = g.index(0, 40);
        ASSERT_TRUE(stopped(stopped(y, k), k) == stopped(y, k));
    });
}

TEST(SamplePath, StoppedThenBumpMaterializes) {
    const TimeGrid grid(1.0, 8);
    const SamplePath y(grid, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8});
    const SamplePath b = vertical_bump(stopped(y, 2), 5, 1.0);
    EXPECT_EQ(b[4], 2.0);
    EXPECT_EQ(b[5], 3.0);
    EXPECT_EQ(b[8], 3.0);
}

TEST(SamplePath, IdsAreFresh) {
    const TimeGrid grid(1.0, 4);
    SamplePath a(grid);
    SamplePath b(a);
    SamplePath c(grid);
    EXPECT_NE(a.id(), b.id());
    const auto before = c.id();
    c = a;
    EXPECT_NE(c.id(), before);
    EXPECT_NE(c.id(), a.id());
}

TEST(SamplePath, OutOfRangeThrows) {
    const SamplePath y(TimeGrid(1.0, 4));
    EXPECT_THROW(y.at(5), std::out_of_range);
    EXPECT_THROW(stopped(y, 5), std::out_of_range);
}

TEST(QuadraticVariation, Examples) {
    EXPECT_EQ(quadratic_variation(SamplePath(TimeGrid(1.0, 5), 3.0), 5), 0.0);
    EXPECT_EQ(quadratic_variation(SamplePath(TimeGrid(1.0, 2), std::vector<double>{0, 1, 0}), 2), 2.0);
}

TEST(QuadraticVariation, ConcentratesOnBrownianPaths) {
    const PathBundle b = brownian_bundle(TimeGrid(1.0, 10000), 100, 1.0, 17);
    double mean = 0.0;
    for (const SamplePath& y : b.paths) {
        const double q = quadratic_variation(y, 10000);
        EXPECT_NEAR(q, 1.0, 0.05);
        mean += q / 100.0;
    }
    EXPECT_NEAR(mean, 1.0, 0.02);
}

TEST(QuadraticVariation, HandComputed) {
    const SamplePath y(TimeGrid(1.0, 3), std::vector<double>{0, 1, -1, 2});
    EXPECT_EQ(quadratic_variation(y, 3), 1.0 + 4.0 + 9.0);
    EXPECT_EQ(quadratic_variation(y, 1), 1.0);
    EXPECT_THROW(quadratic_variation(y, 0), std::out_of_range);
}

TEST(BrownianBundle, DeterministicAndScaled) {
    const TimeGrid grid(2.0, 200);
    const PathBundle a = brownian_bundle(grid, 2000, 1.5, 9);
    const PathBundle b = brownian_bundle(grid, 2000, 1.5, 9);
    ASSERT_EQ(a.size(), 2000u);
    double m2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a.paths[i].values(), b.paths[i].values());
        ASSERT_EQ(a.paths[i][0], 0.0);
        m2 += a.paths[i][200] * a.paths[i][200];
    }
    m2 /= 2000.0;
    const double target = 1.5 * 1.5 * 2.0;
    EXPECT_NEAR(m2, target, 4.0 * target * std::sqrt(2.0 / 2000.0));
}
