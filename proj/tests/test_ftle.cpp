#include <gtest/gtest.h>

#include <cmath>

#include "torusdyn/ftle.hpp"
#include "torusdyn/periodic.hpp"
#include "torusdyn/random.hpp"

using namespace torusdyn;

TEST(FtleWindow, ConstantTriangularJacobianIsExact) {
    TorusMap m;
    m.matrix = {3, 0, 1, 1};
    Rng rng(3);
    for (std::size_t N : {1u, 7u, 50u}) {
        for (int i = 0; i < 20; ++i) {
            auto lam = ftle_window(m, rng.torus_point(), N);
            EXPECT_NEAR(lam.first, std::log(3.0), 1e-12);
            EXPECT_NEAR(lam.second, 0.0, 1e-12);
        }
    }
}

TEST(FtleWindow, FixedPointWindowsMatchMultiplierLogs) {
    TorusMap m = reference_map(0.05, 0.0);
    auto rep = ftle_window(m, {0.0, 0.0}, 50);
    EXPECT_NEAR(rep.first, std::log(3.0), 1e-12);
    EXPECT_NEAR(rep.second, std::log(1.0 + 0.1 * std::numbers::pi), 1e-12);
    auto sad = ftle_window(m, {0.0, 0.5}, 50);
    EXPECT_NEAR(sad.second, std::log(1.0 - 0.1 * std::numbers::pi), 1e-12);
}

TEST(FtleWindow, SumRuleEqualsDeterminantAverage) {
    TorusMap m = reference_map(0.05, 0.02);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        TorusPoint p = rng.torus_point();
        std::size_t N = 40;
        auto lam = ftle_window(m, p, N);
        double logdet = 0.0;
        TorusPoint z = p;
        for (std::size_t s = 0; s < N; ++s) {
            logdet += std::log(std::fabs(m.jacobian(z).det()));
            z = m.eval(z);
        }
        EXPECT_NEAR(lam.first + lam.second, logdet / double(N), 1e-10);
    }
}

TEST(FtleWindow, ChainedWindowsCombineExactly) {
    TorusMap m = reference_map(0.05, 0.02);
    Rng rng(7);
    for (int i = 0; i < 30; ++i) {
        TorusPoint p = rng.torus_point();
        std::size_t a = 17, b = 23;
        QrFrame full;
        qr_cocycle(m, p, a + b, full);
        QrFrame first;
        TorusPoint mid = qr_cocycle(m, p, a, first);
        QrFrame second = first; // continue the same frame
        second.log1 = second.log2 = 0.0;
        qr_cocycle(m, mid, b, second);

        double lam_full = full.log1 / double(a + b);
        double lam_a = first.log1 / double(a), lam_b = second.log1 / double(b);
        EXPECT_NEAR(full.log1, first.log1 + second.log1, 1e-9);
        EXPECT_LE(lam_full, std::max(lam_a, lam_b) + 1e-9);
        EXPECT_GE(lam_full, std::min(lam_a, lam_b) - 1e-9);
    }
}

TEST(FtleWindow, SingularJacobianDetected) {
    TorusMap m;
    m.matrix = {3, 0, 1, 1};
    m.g.terms.push_back({{0, 1}, {0.0, 1.0 / two_pi}, 0.0});
    // det DF = 3 (1 + cos 2 pi y) vanishes at y = 1/2
    EXPECT_THROW(ftle_window(m, {0.25, 0.5}, 5), SingularJacobianError);
}

TEST(PositiveCountSeries, TrivialFamilies) {
    TorusMap lin;
    lin.matrix = {3, 0, 1, 1};
    FtleSeries s1 = positive_count_series(lin, {0.2, 0.7}, 2000, 20, 20);
    for (int c : s1.counts) EXPECT_EQ(c, 1); // lambda2 = 0 exactly, not positive

    TorusMap expanding;
    expanding.matrix = {3, 0, 0, 2};
    FtleSeries s2 = positive_count_series(expanding, {0.2, 0.7}, 2000, 20, 20);
    for (int c : s2.counts) EXPECT_EQ(c, 2);
}

TEST(PositiveCountSeries, ReferenceMapOscillates) {
    TorusMap m = reference_map(0.05, 0.02);
    FtleSeries s = positive_count_series(m, {0.1, 0.2}, 30000, 30, 1);
    OscillationStats st = oscillation_stats(s);
    EXPECT_GT(st.frac_one, 0.0);
    EXPECT_GT(st.frac_two, 0.0);
    EXPECT_GE(st.switches, 1u);
    EXPECT_LT(st.min_lambda2, 0.0);
    EXPECT_GT(st.max_lambda2, 0.0);
}

TEST(OscillationStats, SyntheticSeries) {
    FtleSeries s;
    s.window = 10;
    s.counts = {1, 1, 1, 1};
    s.exponents = {{1, 0.1}, {1, 0.2}, {1, 0.3}, {1, 0.4}};
    for (std::size_t i = 0; i < 4; ++i) s.starts.push_back(i);
    OscillationStats st = oscillation_stats(s);
    EXPECT_DOUBLE_EQ(st.frac_one, 1.0);
    EXPECT_EQ(st.switches, 0u);
    EXPECT_DOUBLE_EQ(st.min_lambda2, 0.1);
    EXPECT_DOUBLE_EQ(st.max_lambda2, 0.4);

    FtleSeries alt;
    alt.window = 10;
    alt.counts = {1, 2, 1, 2, 1};
    alt.exponents.assign(5, {1.0, -0.1});
    for (std::size_t i = 0; i < 5; ++i) alt.starts.push_back(i);
    EXPECT_EQ(oscillation_stats(alt).switches, 4u);
    EXPECT_THROW(oscillation_stats(FtleSeries{}), std::invalid_argument);
}

TEST(TransitivityCover, FullDiskCoversImmediately) {
    TorusMap m = reference_map(0.05, 0.02);
    CoverageResult res = transitivity_cover(m, {0.5, 0.5}, std::sqrt(2.0) / 2.0, 16, 5);
    ASSERT_TRUE(res.n_cover.has_value());
    EXPECT_EQ(*res.n_cover, 1u);
}

TEST(TransitivityCover, SmallDiskCoversEventually) {
    TorusMap m = reference_map(0.05, 0.02);
    CoverageResult res = transitivity_cover(m, {0.3, 0.6}, 0.05, 64, 60);
    ASSERT_TRUE(res.n_cover.has_value());
    EXPECT_LE(*res.n_cover, 60u);
    for (std::size_t i = 1; i < res.coverage.size(); ++i)
        EXPECT_GE(res.coverage[i], res.coverage[i - 1]);
    EXPECT_DOUBLE_EQ(res.coverage.back(), 1.0);
}
