#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "kylesim/stats.hpp"

using namespace kylesim;

TEST(Stats, MeanSeExample) {
    const MeanSe m = mean_se({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_NEAR(m.sd, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
    EXPECT_EQ(m.n, 4u);
}

TEST(Stats, KolmogorovSurvivalKnownValues) {
    // critical values of the limiting distribution
    EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 1e-4);
    EXPECT_NEAR(kolmogorov_survival(1.6276), 0.01, 1e-4);
    EXPECT_NEAR(kolmogorov_survival(1.2238), 0.10, 1e-4);
    EXPECT_DOUBLE_EQ(kolmogorov_survival(0.0), 1.0);
    // both series agree where they switch
    EXPECT_NEAR(kolmogorov_survival(1.1799), kolmogorov_survival(1.1801), 1e-3);
}

TEST(Stats, KsAcceptsNormalsAndRejectsShift) {
    std::mt19937_64 eng(7);
    std::normal_distribution<double> n01;
    std::vector<double> x(20000);
    for (double& v : x) v = n01(eng);
    EXPECT_GT(ks_normal(x).p_value, 0.01);
    for (double& v : x) v += 0.05;
    EXPECT_LT(ks_normal(x).p_value, 0.01);
    for (double& v : x) v = (v - 0.05) * 1.1;
    EXPECT_LT(ks_normal(x).p_value, 0.01);
}

TEST(Stats, KsExample) {
    // a single point at 0: D = 1/2
    const KsResult r = ks_normal({0.0});
    EXPECT_DOUBLE_EQ(r.D, 0.5);
    EXPECT_EQ(r.n, 1u);
}

TEST(Stats, KsPValueIsRoughlyUniformUnderTheNull) {
    int rejections = 0;
    prop::for_all(71, 200, [&](prop::Gen& g) {
        std::vector<double> x(300);
        for (double& v : x) v = g.normal();
        if (ks_normal(x).p_value < 0.05) ++rejections;
    });
    EXPECT_LT(rejections, 22);
}

TEST(Stats, LjungBoxDetectsAutocorrelation) {
    std::mt19937_64 eng(8);
    std::normal_distribution<double> n01;
    std::vector<double> white(5000), ar(5000);
    double prev = 0.0;
    for (std::size_t i = 0; i < white.size(); ++i) {
        white[i] = n01(eng);
        prev = 0.3 * prev + n01(eng);
        ar[i] = prev;
    }
    EXPECT_GT(ljung_box(white, 10).p_value, 0.01);
    const LjungBoxResult r = ljung_box(ar, 10);
    EXPECT_LT(r.p_value, 1e-6);
    EXPECT_NEAR(r.rho[0], 0.3, 0.05);
    EXPECT_EQ(r.lags, 10u);
}

TEST(Stats, LjungBoxPanelIgnoresRowBoundaries) {
    // independent rows of white noise: pooled pairs never straddle two rows
    std::mt19937_64 eng(9);
    std::normal_distribution<double> n01;
    std::vector<double> x(400 * 20);
    for (double& v : x) v = n01(eng);
    const LjungBoxResult r = ljung_box_panel(x, 20, 5);
    EXPECT_GT(r.p_value, 0.01);
    EXPECT_THROW(ljung_box_panel(x, 7, 5), std::invalid_argument);
}

TEST(Stats, OlsRecoversALine) {
    prop::for_all(72, 50, [](prop::Gen& g) {
        const double a = g.uniform(-2, 2), b = g.uniform(-2, 2);
        std::vector<double> x(200), y(200);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = g.normal();
            y[i] = a + b * x[i] + 0.1 * g.normal();
        }
        const OlsResult r = ols_hc1(x, y);
        ASSERT_LT(std::abs(r.slope - b), 5.0 * r.se_slope);
        ASSERT_LT(std::abs(r.intercept - a), 5.0 * r.se_intercept);
        ASSERT_GT(r.se_slope, 0.0);
    });
}

TEST(Stats, OlsExactFit) {
    const OlsResult r = ols_hc1({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
    EXPECT_NEAR(r.slope, 2.0, 1e-14);
    EXPECT_NEAR(r.intercept, 1.0, 1e-14);
    EXPECT_NEAR(r.se_slope, 0.0, 1e-12);
    EXPECT_THROW(ols_hc1({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
    EXPECT_THROW(ols_hc1({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(Stats, LogLogSlope) {
    EXPECT_NEAR(log_log_slope({0.01, 0.005, 0.0025}, {0.1, 0.1 / std::sqrt(2.0), 0.05}), 0.5, 1e-12);
}

TEST(Stats, BinnedMeansCoverTheSample) {
    std::vector<double> x(100), y(100);
    for (std::size_t i = 0; i < 100; ++i) {
        x[i] = static_cast<double>(99 - i);
        y[i] = 2.0 * x[i];
    }
    const auto bins = binned_means(x, y, 10);
    ASSERT_EQ(bins.size(), 10u);
    std::size_t total = 0;
    for (const Bin& b : bins) {
        total += b.n;
        EXPECT_DOUBLE_EQ(b.y_mean, 2.0 * b.x_mean);
    }
    EXPECT_EQ(total, 100u);
    EXPECT_DOUBLE_EQ(bins.front().x_mean, 4.5);
}
