#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "torusdyn/map_file.hpp"
#include "torusdyn/random.hpp"
#include "torusdyn/torus_map.hpp"

using namespace torusdyn;

namespace {

TorusMap linear_map() {
    TorusMap m;
    m.matrix = {3, 0, 1, 1};
    return m;
}

} // namespace

TEST(Geometry, Wrap01) {
    EXPECT_EQ(wrap01(1.0), 0.0);
    EXPECT_EQ(wrap01(0.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap01(1.25), 0.25);
    EXPECT_DOUBLE_EQ(wrap01(-0.25), 0.75);
    // tiny negative values must not round up to exactly 1.0
    double w = wrap01(-1e-18);
    EXPECT_LT(w, 1.0);
    EXPECT_GE(w, 0.0);
}

TEST(Geometry, TorusDistance) {
    EXPECT_NEAR(torus_dist({0.0, 0.0}, {0.5, 0.5}), std::sqrt(2.0) / 2.0, 1e-15);
    EXPECT_NEAR(torus_dist({0.95, 0.0}, {0.05, 0.0}), 0.1, 1e-15);
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        TorusPoint a = rng.torus_point(), b = rng.torus_point();
        EXPECT_NEAR(torus_dist(a, b), torus_dist(b, a), 1e-15);
        EXPECT_LE(torus_dist(a, b), std::sqrt(2.0) / 2.0 + 1e-15);
    }
}

TEST(TorusMapEval, LinearArithmetic) {
    TorusMap m = linear_map();
    TorusPoint p = m.eval({0.2, 0.7});
    EXPECT_NEAR(p.x, 0.6, 1e-15);
    EXPECT_NEAR(p.y, 0.9, 1e-15);
    TorusPoint o = m.eval({0.0, 0.0});
    EXPECT_EQ(o.x, 0.0);
    EXPECT_EQ(o.y, 0.0);
}

TEST(TorusMapEval, PerturbedHandValue) {
    // y' = 0.5 + 0.25 + 0.05 * sin(pi/2) = 0.8
    TorusMap m = reference_map(0.05);
    TorusPoint p = m.eval({0.5, 0.25});
    EXPECT_NEAR(p.x, 0.5, 1e-15);
    EXPECT_NEAR(p.y, 0.8, 1e-15);
}

TEST(TorusMapEval, OutputAlwaysInUnitSquare) {
    TorusMap m = reference_map(0.05, 0.37);
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        TorusPoint p = m.eval(rng.torus_point());
        EXPECT_GE(p.x, 0.0);
        EXPECT_LT(p.x, 1.0);
        EXPECT_GE(p.y, 0.0);
        EXPECT_LT(p.y, 1.0);
    }
}

TEST(LiftEval, HandValues) {
    TorusMap lin = linear_map();
    LiftPoint q = lin.lift_eval({1.2, 0.7});
    EXPECT_NEAR(q.x, 3.6, 1e-15);
    EXPECT_NEAR(q.y, 1.9, 1e-15);

    TorusMap m = reference_map(0.05);
    LiftPoint r = m.lift_eval({0.5, 1.25});
    EXPECT_NEAR(r.x, 1.5, 1e-15);
    EXPECT_NEAR(r.y, 1.8, 1e-14);
}

TEST(LiftEval, ProjectionEquivariance) {
    TorusMap m = reference_map(0.05, 0.02);
    Rng rng(23);
    for (int i = 0; i < 1000; ++i) {
        LiftPoint q = rng.lift_point(-2.0, 2.0);
        Vec2 nu{double(std::int64_t(rng.bits() % 7) - 3), double(std::int64_t(rng.bits() % 7) - 3)};
        Vec2 diff = m.lift_eval(q + nu) - m.lift_eval(q);
        Vec2 mnu = m.matrix.to_mat().apply(nu);
        EXPECT_NEAR(diff.x, mnu.x, 1e-12);
        EXPECT_NEAR(diff.y, mnu.y, 1e-12);
    }
}

TEST(LiftEval, CommutesWithProjection) {
    TorusMap m = reference_map(0.05, 0.1);
    Rng rng(29);
    for (int i = 0; i < 500; ++i) {
        LiftPoint q = rng.lift_point(-3.0, 3.0);
        TorusPoint via_lift = wrap_point(m.lift_eval(q));
        TorusPoint via_map = m.eval(wrap_point(q));
        EXPECT_NEAR(torus_dist(via_lift, via_map), 0.0, 1e-12);
    }
}

TEST(Jacobian, LinearIsMatrix) {
    TorusMap m = linear_map();
    Mat2 J = m.jacobian(TorusPoint{0.37, 0.91});
    EXPECT_EQ(J.a, 3.0);
    EXPECT_EQ(J.b, 0.0);
    EXPECT_EQ(J.c, 1.0);
    EXPECT_EQ(J.d, 1.0);
}

TEST(Jacobian, AnalyticValueAtOrigin) {
    TorusMap m = reference_map(0.05);
    Mat2 J = m.jacobian(TorusPoint{0.0, 0.0});
    EXPECT_NEAR(J.d, 1.0 + 0.1 * std::numbers::pi, 1e-15);
    EXPECT_EQ(J.b, 0.0);
}

TEST(Jacobian, MatchesCentralDifferences) {
    TorusMap m = reference_map(0.05, 0.02);
    m.g.terms.push_back({{1, 2}, {0.02, 0.01}, 0.3}); // non-skew term
    const double h = 1e-6;
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        LiftPoint q = rng.lift_point(0.0, 1.0);
        Mat2 J = m.jacobian(q);
        LiftPoint xp = m.lift_eval({q.x + h, q.y}), xm = m.lift_eval({q.x - h, q.y});
        LiftPoint yp = m.lift_eval({q.x, q.y + h}), ym = m.lift_eval({q.x, q.y - h});
        Mat2 fd{(xp.x - xm.x) / (2 * h), (yp.x - ym.x) / (2 * h),
                (xp.y - xm.y) / (2 * h), (yp.y - ym.y) / (2 * h)};
        EXPECT_NEAR(J.a, fd.a, 1e-6);
        EXPECT_NEAR(J.b, fd.b, 1e-6);
        EXPECT_NEAR(J.c, fd.c, 1e-6);
        EXPECT_NEAR(J.d, fd.d, 1e-6);
    }
}

TEST(Orbit, BasicComposition) {
    TorusMap m = linear_map();
    auto o0 = m.orbit({0.2, 0.7}, 0);
    ASSERT_EQ(o0.size(), 1u);
    auto o1 = m.orbit({0.2, 0.7}, 1);
    ASSERT_EQ(o1.size(), 2u);
    EXPECT_NEAR(o1[1].x, 0.6, 1e-15);
    EXPECT_NEAR(o1[1].y, 0.9, 1e-15);

    auto a = m.orbit({0.2, 0.7}, 6);
    auto b = m.orbit(a[3], 3);
    for (int i = 0; i <= 3; ++i)
        EXPECT_NEAR(torus_dist(a[3 + i], b[i]), 0.0, 1e-12);
}

TEST(Jacobian, InvertibleEverywhereOnSamples) {
    // hypothesis check for the maps used throughout: det DF never vanishes
    TorusMap m = reference_map(0.05, 0.02);
    m.g.terms.push_back({{1, 2}, {0.02, 0.01}, 0.3});
    Rng rng(43);
    for (int i = 0; i < 5000; ++i)
        EXPECT_GT(std::fabs(m.jacobian(rng.torus_point()).det()), 0.1);
}

TEST(Perturbation, PeriodicInBothCoordinates) {
    FourierPerturbation g;
    g.terms.push_back({{2, -1}, {0.03, 0.07}, 1.1});
    g.terms.push_back({{0, 1}, {0.0, 0.05}, 0.0});
    g.t = 0.25;
    Rng rng(37);
    for (int i = 0; i < 300; ++i) {
        Vec2 z{rng.uniform(-2, 2), rng.uniform(-2, 2)};
        for (auto nu : {Vec2{1, 0}, Vec2{0, 1}, Vec2{-2, 3}}) {
            Vec2 d = g.eval(z + nu) - g.eval(z);
            EXPECT_NEAR(d.x, 0.0, 1e-13);
            EXPECT_NEAR(d.y, 0.0, 1e-13);
        }
    }
}

TEST(Perturbation, SupBoundsHold) {
    FourierPerturbation g;
    g.terms.push_back({{2, -1}, {0.03, 0.07}, 1.1});
    g.terms.push_back({{0, 1}, {0.0, 0.05}, 0.4});
    g.t = -0.1;
    double gb = g.sup_norm(), db = g.dg_sup_norm();
    Rng rng(41);
    for (int i = 0; i < 10000; ++i) {
        Vec2 z{rng.uniform01(), rng.uniform01()};
        EXPECT_LE(norm(g.eval(z)), gb + 1e-12);
        EXPECT_LE(g.jacobian(z).op_norm(), db + 1e-12);
    }
}

TEST(MapFile, ParseAndRoundTrip) {
    std::string text =
        "# reference family\n"
        "[matrix]\n"
        "m00 = 3\n"
        "m01 = 0\n"
        "m10 = 1\n"
        "m11 = 1\n"
        "[perturbation]\n"
        "term = freq=(0,1) coeff=(0,0.05) phase=0\n"
        "t = 0.02\n";
    std::istringstream in(text);
    TorusMap m = parse_map_text(in, "inline");
    EXPECT_EQ(m.matrix.a, 3);
    ASSERT_EQ(m.g.terms.size(), 1u);
    EXPECT_EQ(m.g.terms[0].freq.y, 1);
    EXPECT_DOUBLE_EQ(m.g.terms[0].coeff.y, 0.05);
    EXPECT_DOUBLE_EQ(m.g.t, 0.02);

    std::istringstream in2(format_map_text(m));
    TorusMap m2 = parse_map_text(in2, "roundtrip");
    EXPECT_TRUE(m.matrix == m2.matrix);
    EXPECT_DOUBLE_EQ(m.g.t, m2.g.t);
    EXPECT_DOUBLE_EQ(m.g.terms[0].coeff.y, m2.g.terms[0].coeff.y);
}

TEST(MapFile, Errors) {
    EXPECT_THROW(load_map_file("/nonexistent/map.cfg"), MapFileError);
    try {
        load_map_file("/nonexistent/map.cfg");
    } catch (const MapFileError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/map.cfg"), std::string::npos);
    }

    auto expect_bad = [](const std::string& text) {
        std::istringstream in(text);
        EXPECT_THROW(parse_map_text(in, "inline"), MapFileError);
    };
    expect_bad("[matrix]\nm00 = 3\n");                       // missing entries
    expect_bad("[matrix]\nm00 = x\n");                       // non-integer
    expect_bad("m00 = 3\n");                                 // key outside section
    expect_bad("[matrix]\nm00=1\nm01=0\nm10=0\nm11=1\n[perturbation]\nterm = freq=(0) c\n");
    expect_bad("[matrix]\nm00=0\nm01=0\nm10=0\nm11=0\n");    // singular
}
