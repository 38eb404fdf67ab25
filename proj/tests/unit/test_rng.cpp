#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "generators.hpp"
#include "kylesim/rng.hpp"

using namespace kylesim;

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST(Philox, KnownAnswerZero) {
    const auto r = philox4x32({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r, (Philox4x32Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerOnes) {
    const auto r = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
    EXPECT_EQ(r, (Philox4x32Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi) {
    const auto r = philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
    EXPECT_EQ(r, (Philox4x32Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalStream, SameKeySameSequence) {
    NormalStream a(7, 3, Stream::noise), b(7, 3, Stream::noise);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(NormalStream, KeysAreIndependentStreams) {
    NormalStream a(7, 3, Stream::noise), b(7, 4, Stream::noise), c(7, 3, Stream::fundamental), d(8, 3, Stream::noise);
    std::set<double> first{a.normal(), b.normal(), c.normal(), d.normal()};
    EXPECT_EQ(first.size(), 4u);
}

TEST(NormalStream, UniformInOpenInterval) {
    prop::for_all(11, 20, [](prop::Gen& g) {
        NormalStream s(g.word(), g.word(), Stream::auxiliary);
        for (int i = 0; i < 500; ++i) {
            const double u = s.uniform();
            ASSERT_GT(u, 0.0);
            ASSERT_LT(u, 1.0);
        }
    });
}

TEST(NormalStream, NormalMoments) {
    NormalStream s(123, 0, Stream::noise);
    const int n = 400000;
    double m = 0.0, m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        m += z;
        m2 += z * z;
        m4 += z * z * z * z;
    }
    m /= n;
    m2 /= n;
    m4 /= n;
    EXPECT_LT(std::abs(m), 4.0 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}
